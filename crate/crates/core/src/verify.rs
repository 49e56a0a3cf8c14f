//! Independent brute-force oracles.
//!
//! Each oracle recomputes a claimed identity from first principles without
//! sharing a code path with the implementation it checks, so the CLI can
//! run the same battery on user inputs. Reports are deterministic given
//! (seed, input).

use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::complex::{Decomposition, VertexSubset, WeightedTriangulation};
use crate::error::Result;
use crate::exec;
use crate::geometry::{curvature, face_angles, interior_to_disk, limit_curvature_kz, Geometry};
use crate::solver::RStar;

#[derive(Debug, Clone, Serialize)]
pub struct OracleCheck {
    pub name: String,
    pub pass: bool,
    pub max_deviation: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct OracleReport {
    pub checks: Vec<OracleCheck>,
}

impl OracleReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn push(&mut self, name: impl Into<String>, max_deviation: f64, tol: f64, samples: usize) {
        self.checks.push(OracleCheck {
            name: name.into(),
            pass: max_deviation <= tol,
            max_deviation,
            samples,
        });
    }
}

/// Recompute phi(U) from first principles: build the cells of tau_U
/// explicitly, count them for chi, and scan corners directly for the link.
pub fn oracle_phi(tri: &WeightedTriangulation, u_mask: u64) -> f64 {
    assert!(u_mask != 0);
    let in_u = |v: usize| u_mask >> v & 1 == 1;

    // Explicit cell lists of tau_U.
    let vertices: Vec<usize> = (0..tri.vertex_count()).filter(|&v| in_u(v)).collect();
    let edges: Vec<usize> = (0..tri.edge_count())
        .filter(|&e| {
            let ends = tri.edge(e).ends;
            in_u(ends.0) && in_u(ends.1)
        })
        .collect();
    let faces: Vec<usize> = (0..tri.face_count())
        .filter(|&f| tri.face_corner_vertices(f).iter().all(|&v| in_u(v)))
        .collect();
    let chi = vertices.len() as i64 - edges.len() as i64 + faces.len() as i64;

    // Link scan: a face with a unique corner in U whose opposite edge has
    // no endpoint in U.
    let mut link_sum = 0.0;
    for f in 0..tri.face_count() {
        let cv = tri.face_corner_vertices(f);
        let inside: Vec<usize> = (0..3).filter(|&k| in_u(cv[k])).collect();
        if inside.len() != 1 {
            continue;
        }
        let opposite = tri.faces()[f].sides[(inside[0] + 1) % 3].edge;
        let ends = tri.edge(opposite).ends;
        if !in_u(ends.0) && !in_u(ends.1) {
            link_sum += PI - tri.weight(opposite);
        }
    }
    -link_sum + 2.0 * PI * chi as f64
}

/// Compare phi against [`oracle_phi`] on every connected subset (or a
/// random selection when there are more than `max_samples`).
pub fn oracle_phi_battery(
    tri: &WeightedTriangulation,
    seed: u64,
    max_samples: usize,
) -> OracleReport {
    let full = crate::complex::full_mask(tri);
    let mut masks: Vec<u64> = (1..=full)
        .filter(|&m| crate::complex::is_connected(tri, m))
        .collect();
    if masks.len() > max_samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        masks.shuffle(&mut rng);
        masks.truncate(max_samples);
        masks.sort_unstable();
    }
    let deviations = exec::map_slice(&masks, |&mask| {
        let subset = VertexSubset::new(tri, mask);
        (crate::complex::phi(tri, &subset) - oracle_phi(tri, mask)).abs()
    });
    let max = deviations.iter().cloned().fold(0.0, f64::max);
    let mut report = OracleReport::default();
    report.push("phi matches explicit cell construction", max, 1e-12, masks.len());
    report
}

/// Per-triangle finite-difference check of the sigma-weighted symmetry
/// d theta_i / d r_j sigma(r_j) = d theta_j / d r_i sigma(r_i)
/// and the sign pattern d theta_i / d r_i < 0 < d theta_i / d r_j.
pub fn oracle_fd_symmetry(
    g: Geometry,
    tri: &WeightedTriangulation,
    seed: u64,
    samples_per_face: usize,
) -> Result<OracleReport> {
    let h = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_asym: f64 = 0.0;
    let mut sign_ok = true;
    let mut count = 0;

    for f in 0..tri.face_count() {
        for _ in 0..samples_per_face {
            // Radii independent per corner slot: the identity is about a
            // single triangle, so repeated vertices get one shared radius.
            let mut r = vec![0.0; tri.vertex_count()];
            for v in 0..tri.vertex_count() {
                r[v] = rng.gen_range(0.2..3.0);
            }
            let cv = tri.face_corner_vertices(f);
            let distinct: HashSet<usize> = cv.iter().copied().collect();
            if distinct.len() < 3 {
                // Angle derivatives per corner are only separable when the
                // three corners carry distinct vertices.
                continue;
            }
            let angle = |r: &[f64], corner: usize| -> Result<f64> {
                Ok(face_angles(g, tri, f, r)?[corner])
            };
            let d = |i: usize, j: usize, r: &[f64]| -> Result<f64> {
                let mut plus = r.to_vec();
                let mut minus = r.to_vec();
                plus[cv[j]] += h;
                minus[cv[j]] -= h;
                Ok((angle(&plus, i)? - angle(&minus, i)?) / (2.0 * h))
            };
            for i in 0..3 {
                let dii = d(i, i, &r)?;
                if dii >= 0.0 {
                    sign_ok = false;
                }
                for j in 0..3 {
                    if i == j {
                        continue;
                    }
                    let dij = d(i, j, &r)?;
                    if dij <= 0.0 {
                        sign_ok = false;
                    }
                    let dji = d(j, i, &r)?;
                    let lhs = dij * g.sigma(r[cv[j]]);
                    let rhs = dji * g.sigma(r[cv[i]]);
                    max_asym = max_asym.max((lhs - rhs).abs());
                }
            }
            count += 1;
        }
    }

    let mut report = OracleReport::default();
    report.push("sigma-weighted angle derivative symmetry", max_asym, 1e-6, count);
    report.checks.push(OracleCheck {
        name: "angle derivative sign pattern".into(),
        pass: sign_ok,
        max_deviation: if sign_ok { 0.0 } else { f64::NAN },
        samples: count,
    });
    Ok(report)
}

/// Follow the synthetic degenerate curve r_u(t) = t^{-n(u)} r*_u and check
/// that the surface curvature converges to the blockwise limit curvatures,
/// with monotone gap decay across the given times.
pub fn oracle_degenerate_curve(
    tri: &WeightedTriangulation,
    dec: &Decomposition,
    rstar: &RStar,
    times: &[f64],
    tol_final: f64,
) -> Result<OracleReport> {
    let g = Geometry::for_triangulation(tri);
    let n = tri.vertex_count();

    // Expected limits per vertex: K_Z at r* on its block's disk, K of the
    // quotient at r* for V_0.
    let mut expected = vec![0.0; n];
    for element in dec.z_elements() {
        let disk = crate::complex::build_disk(tri, dec, element.z_mask, Default::default())?;
        let interior: Vec<usize> = (0..n).filter(|&v| element.v_z >> v & 1 == 1).collect();
        let radii: Vec<f64> = interior.iter().map(|&v| rstar.values[v]).collect();
        let kz = limit_curvature_kz(&disk, &interior_to_disk(&disk, &radii))?;
        for (&v, &k) in interior.iter().zip(&kz) {
            expected[v] = k;
        }
    }
    let quotient = &rstar.quotient;
    let gq = Geometry::for_triangulation(quotient);
    let q_radii: Vec<f64> = (0..quotient.vertex_count())
        .map(|q| {
            let v = tri.vertex_id_index(quotient.vertex_id(q)).expect("quotient vertex");
            rstar.values[v]
        })
        .collect();
    let kq = curvature(gq, quotient, &q_radii)?;
    for q in 0..quotient.vertex_count() {
        let v = tri.vertex_id_index(quotient.vertex_id(q)).unwrap();
        expected[v] = kq[q];
    }

    let mut gaps: Vec<f64> = Vec::with_capacity(times.len());
    for &t in times {
        let r: Vec<f64> = (0..n)
            .map(|v| t.powi(-(dec.level_of[v] as i32)) * rstar.values[v])
            .collect();
        let k = curvature(g, tri, &r)?;
        let gap = k
            .iter()
            .zip(&expected)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        gaps.push(gap);
    }

    let mut report = OracleReport::default();
    let monotone = gaps.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
    report.checks.push(OracleCheck {
        name: "curvature gap decays monotonically along the degenerate curve".into(),
        pass: monotone,
        max_deviation: gaps.last().copied().unwrap_or(f64::NAN),
        samples: times.len(),
    });
    report.push(
        "final curvature gap against blockwise limits",
        gaps.last().copied().unwrap_or(f64::NAN),
        tol_final,
        times.len(),
    );
    Ok(report)
}

/// Gauss-Bonnet battery: Euclidean closed surfaces sum K to zero; disks sum
/// K_D to 2 pi.
pub fn oracle_gauss_bonnet(
    tri: &WeightedTriangulation,
    seed: u64,
    metrics: usize,
) -> Result<OracleReport> {
    let g = Geometry::for_triangulation(tri);
    let mut report = OracleReport::default();
    if g != Geometry::Euclidean {
        return Ok(report);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_dev: f64 = 0.0;
    for _ in 0..metrics {
        let r: Vec<f64> = (0..tri.vertex_count())
            .map(|_| rng.gen_range(0.1..5.0))
            .collect();
        let k = curvature(g, tri, &r)?;
        max_dev = max_dev.max(k.iter().sum::<f64>().abs());
    }
    report.push("closed-surface total curvature", max_dev, 1e-10, metrics);
    Ok(report)
}

/// The strict lower curvature bound: sum_{v in U} K_v(r) > phi(U) for
/// nonempty proper subsets, in raw comparison.
pub fn oracle_curvature_bound(
    tri: &WeightedTriangulation,
    seed: u64,
    pairs: usize,
) -> Result<OracleReport> {
    let g = Geometry::for_triangulation(tri);
    let n = tri.vertex_count();
    let full = crate::complex::full_mask(tri);
    let mut report = OracleReport::default();
    if n < 2 {
        // No nonempty proper subsets exist.
        return Ok(report);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ok = true;
    let mut min_margin = f64::INFINITY;
    let mut count = 0;
    while count < pairs {
        let mask = rng.gen_range(1..=full);
        if mask == full {
            continue;
        }
        let r: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..5.0)).collect();
        let k = curvature(g, tri, &r)?;
        let total: f64 = (0..n).filter(|&v| mask >> v & 1 == 1).map(|v| k[v]).sum();
        let phi = crate::complex::phi(tri, &VertexSubset::new(tri, mask));
        if !(total > phi) {
            ok = false;
        }
        min_margin = min_margin.min(total - phi);
        count += 1;
    }
    report.checks.push(OracleCheck {
        name: "strict curvature lower bound sum K > phi".into(),
        pass: ok,
        max_deviation: -min_margin,
        samples: count,
    });
    Ok(report)
}

/// The full battery on one input, as run by the CLI `verify` subcommand.
pub fn run_battery(tri: &WeightedTriangulation, seed: u64) -> Result<OracleReport> {
    let g = Geometry::for_triangulation(tri);
    let mut report = OracleReport::default();
    report
        .checks
        .extend(oracle_phi_battery(tri, seed, 500).checks);
    report
        .checks
        .extend(oracle_fd_symmetry(g, tri, seed.wrapping_add(1), 5)?.checks);
    report
        .checks
        .extend(oracle_gauss_bonnet(tri, seed.wrapping_add(2), 100)?.checks);
    report
        .checks
        .extend(oracle_curvature_bound(tri, seed.wrapping_add(3), 100)?.checks);
    Ok(report)
}

/// Deterministic JSON rendering of a report.
pub fn report_to_json(report: &OracleReport) -> serde_json::Value {
    let checks: Vec<serde_json::Value> = report
        .checks
        .iter()
        .map(|c| {
            serde_json::json!({
                "name": c.name,
                "pass": c.pass,
                "max_deviation": c.max_deviation,
                "samples": c.samples,
            })
        })
        .collect();
    serde_json::json!({ "all_pass": report.all_pass(), "checks": checks })
}

/// Per-vertex copy of a metric keyed by vertex id, for deterministic JSON.
pub fn metric_to_json(tri: &WeightedTriangulation, r: &[f64]) -> serde_json::Value {
    let map: HashMap<String, f64> = (0..tri.vertex_count())
        .map(|v| (tri.vertex_id(v).to_string(), r[v]))
        .collect();
    let sorted: std::collections::BTreeMap<_, _> = map.into_iter().collect();
    serde_json::json!(sorted)
}
