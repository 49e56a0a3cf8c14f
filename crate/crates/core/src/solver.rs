//! Newton solves for circle pattern metrics (K = 0), limit metrics
//! (K_Z = 0 on the product-1 slice) and the assembled degeneracy order r*.
//!
//! The residual is the curvature itself (the gradient of the convex
//! potential), its Jacobian comes from finite differences, and normalized
//! solves project Newton steps onto the sum-zero hyperplane of logarithmic
//! coordinates, re-centering after each step. Backtracking keeps the
//! residual norm strictly decreasing, so a bad answer is never silent.

use nalgebra::{DMatrix, DVector};

use crate::complex::{
    build_disk, build_quotient, Decomposition, DiagonalRule, DiskTriangulation, SubsetReport,
    Verdict, WeightedTriangulation,
};
use crate::error::{Error, Result};
use crate::geometry::{
    curvature, from_coordinates, interior_radii_from_coords, kz_jacobian, limit_curvature_kz,
    to_coordinates, Geometry,
};
use crate::geometry::{curvature_jacobian, interior_to_disk};

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub residual_tol: f64,
    pub max_iterations: usize,
    pub backtrack_factor: f64,
    pub max_backtracks: usize,
    pub fd_step: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            residual_tol: 1e-11,
            max_iterations: 100,
            backtrack_factor: 0.5,
            max_backtracks: 40,
            fd_step: crate::geometry::DEFAULT_FD_STEP,
        }
    }
}

impl SolveOptions {
    fn validate(&self) -> Result<()> {
        if !(self.residual_tol > 0.0) || !(self.fd_step > 0.0) {
            return Err(Error::Precondition("tolerances must be positive".into()));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::Precondition(
                "backtrack factor must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Damped Newton on G(x) = 0. With `normalized` the step is solved inside
/// the sum-zero hyperplane through a bordered system (the Jacobian kernel
/// is the constant vector there) and iterates are re-centered.
fn newton<G, J>(
    x0: &[f64],
    normalized: bool,
    opts: &SolveOptions,
    eval: G,
    jacobian: J,
) -> Result<(Vec<f64>, f64, usize)>
where
    G: Fn(&[f64]) -> Result<Vec<f64>>,
    J: Fn(&[f64]) -> Result<DMatrix<f64>>,
{
    opts.validate()?;
    let n = x0.len();
    let mut x = x0.to_vec();
    if normalized {
        let mean: f64 = x.iter().sum::<f64>() / n as f64;
        x.iter_mut().for_each(|xi| *xi -= mean);
    }
    let mut g = eval(&x)?;
    // Regularization weight, escalated when a line search stalls. Keeps the
    // step useful on the saturated plateaus far from the solution, where
    // the Jacobian degenerates.
    let mut lambda: f64 = 0.0;
    // Far iterates get their step length capped; radii may still change by
    // a factor e^10 per iteration.
    const MAX_STEP: f64 = 10.0;

    let solve_step = |j: &DMatrix<f64>, g: &[f64], lambda: f64| -> Result<DVector<f64>> {
        let mut jj = j.clone();
        if lambda > 0.0 {
            let scale = (0..n).map(|i| j[(i, i)].abs()).fold(0.0f64, f64::max).max(1e-8);
            for i in 0..n {
                jj[(i, i)] += lambda * scale;
            }
        }
        if normalized {
            let mut bordered = DMatrix::zeros(n + 1, n + 1);
            bordered.view_mut((0, 0), (n, n)).copy_from(&jj);
            for i in 0..n {
                bordered[(i, n)] = 1.0;
                bordered[(n, i)] = 1.0;
            }
            let mut rhs = DVector::zeros(n + 1);
            for i in 0..n {
                rhs[i] = -g[i];
            }
            let solution = bordered
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::Internal("bordered Newton system is singular".into()))?;
            Ok(solution.rows(0, n).into_owned())
        } else {
            jj.lu()
                .solve(&DVector::from_column_slice(
                    &g.iter().map(|k| -k).collect::<Vec<_>>(),
                ))
                .ok_or_else(|| Error::Internal("Newton system is singular".into()))
        }
    };

    for iteration in 0..opts.max_iterations {
        let residual = norm_inf(&g);
        if residual < opts.residual_tol {
            return Ok((x, residual, iteration));
        }

        let j = jacobian(&x)?;
        let g_norm = norm2(&g);
        let mut progressed = false;
        'damping: for _ in 0..8 {
            let mut delta = solve_step(&j, &g, lambda)?;
            let len = delta.amax();
            if len > MAX_STEP {
                delta *= MAX_STEP / len;
            }
            // Backtrack until the 2-norm of the residual decreases.
            let mut step = 1.0;
            for _ in 0..=opts.max_backtracks {
                let mut candidate: Vec<f64> = (0..n).map(|i| x[i] + step * delta[i]).collect();
                if normalized {
                    let mean: f64 = candidate.iter().sum::<f64>() / n as f64;
                    candidate.iter_mut().for_each(|xi| *xi -= mean);
                }
                match eval(&candidate) {
                    Ok(g_new) if norm2(&g_new) < g_norm => {
                        x = candidate;
                        g = g_new;
                        lambda = if lambda > 1e-10 { lambda / 4.0 } else { 0.0 };
                        progressed = true;
                        break 'damping;
                    }
                    Ok(_) | Err(Error::Domain(_)) => step *= opts.backtrack_factor,
                    Err(e) => return Err(e),
                }
            }
            lambda = (lambda * 10.0).max(1e-4);
        }
        if !progressed {
            return Err(Error::NoConvergence {
                best: x,
                residual,
                iterations: iteration,
            });
        }
    }
    let residual = norm_inf(&g);
    if residual < opts.residual_tol {
        Ok((x, residual, opts.max_iterations))
    } else {
        Err(Error::NoConvergence {
            best: x,
            residual,
            iterations: opts.max_iterations,
        })
    }
}

/// A solved circle pattern metric.
#[derive(Debug, Clone)]
pub struct CirclePattern {
    pub radii: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Solve K(r) = 0 on a SUBCRITICAL triangulation from the all-ones start.
/// Euclidean results are normalized to radius product 1.
pub fn solve_circle_pattern(
    g: Geometry,
    tri: &WeightedTriangulation,
    report: &SubsetReport,
    opts: &SolveOptions,
) -> Result<CirclePattern> {
    solve_circle_pattern_from(g, tri, report, &vec![1.0; tri.vertex_count()], opts)
}

/// As [`solve_circle_pattern`] but from a caller-chosen initial metric.
pub fn solve_circle_pattern_from(
    g: Geometry,
    tri: &WeightedTriangulation,
    report: &SubsetReport,
    r0: &[f64],
    opts: &SolveOptions,
) -> Result<CirclePattern> {
    if report.verdict != Verdict::Subcritical {
        return Err(Error::Precondition(format!(
            "solve_circle_pattern requires a SUBCRITICAL triangulation, got {:?}",
            report.verdict
        )));
    }
    let x0 = to_coordinates(g, r0)?;
    let normalized = g == Geometry::Euclidean;
    let (x, residual, iterations) = newton(
        &x0,
        normalized,
        opts,
        |x| {
            let r = from_coordinates(g, x)?;
            curvature(g, tri, &r)
        },
        |x| curvature_jacobian(g, tri, x, opts.fd_step),
    )?;
    Ok(CirclePattern {
        radii: from_coordinates(g, &x)?,
        residual,
        iterations,
    })
}

/// The limit metric of one critical element: K_Z = 0 on the product-1
/// slice of the interior radii.
#[derive(Debug, Clone)]
pub struct LimitMetric {
    /// Original vertex indices of V_Z, ascending.
    pub vertices: Vec<usize>,
    /// Radii aligned with `vertices`; product 1.
    pub radii: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Solve the limit metric for a Z element from the all-ones start.
pub fn solve_limit_metric(
    tri: &WeightedTriangulation,
    dec: &Decomposition,
    z_mask: u64,
    opts: &SolveOptions,
) -> Result<LimitMetric> {
    solve_limit_metric_from(tri, dec, z_mask, None, opts)
}

/// As [`solve_limit_metric`], optionally from caller-chosen initial radii
/// (aligned with ascending V_Z order).
pub fn solve_limit_metric_from(
    tri: &WeightedTriangulation,
    dec: &Decomposition,
    z_mask: u64,
    r0: Option<&[f64]>,
    opts: &SolveOptions,
) -> Result<LimitMetric> {
    let element = dec
        .element_for(z_mask)
        .ok_or_else(|| Error::Precondition(format!("{z_mask:#b} is not an element")))?;
    if element.is_top() {
        return Err(Error::Precondition(
            "solve_limit_metric expects a Z element; use the quotient solve for V".into(),
        ));
    }
    let vertices: Vec<usize> =
        (0..tri.vertex_count()).filter(|&v| element.v_z >> v & 1 == 1).collect();
    let disk = build_disk(tri, dec, z_mask, DiagonalRule::Auto)?;

    if vertices.len() == 1 {
        // K_Z vanishes identically on a single interior vertex; the slice
        // forces r = 1.
        let kz = limit_curvature_kz(&disk, &interior_to_disk(&disk, &[1.0]))?;
        let residual = norm_inf(&kz);
        if residual > opts.residual_tol.max(1e-10) {
            return Err(Error::Internal(format!(
                "K_Z on a singleton element is {residual:e}, expected 0"
            )));
        }
        return Ok(LimitMetric {
            vertices,
            radii: vec![1.0],
            residual,
            iterations: 0,
        });
    }

    let x0: Vec<f64> = match r0 {
        Some(r) => r.iter().map(|&v| v.ln()).collect(),
        None => vec![0.0; vertices.len()],
    };
    let (x, residual, iterations) = newton(
        &x0,
        true,
        opts,
        |x| {
            if x.iter().any(|xi| xi.abs() > 300.0) {
                return Err(Error::Domain(
                    "limit coordinates outside the representable range".into(),
                ));
            }
            let r = interior_radii_from_coords(x);
            limit_curvature_kz(&disk, &interior_to_disk(&disk, &r))
        },
        |x| kz_jacobian(&disk, x, opts.fd_step),
    )?;
    Ok(LimitMetric {
        vertices,
        radii: x.iter().map(|&xi| xi.exp()).collect(),
        residual,
        iterations,
    })
}

/// One block of the assembled order vector.
#[derive(Debug, Clone)]
pub struct RStarBlock {
    /// "Z0", "Z1", ... for the Z family (size-then-mask order), "V" last.
    pub label: String,
    /// Original vertex indices, ascending.
    pub vertices: Vec<usize>,
    pub radii: Vec<f64>,
    pub residual: f64,
}

/// The degeneracy order: blockwise-normalized radii with K_Z(r*) = 0 for
/// every element and K = 0 on the quotient.
#[derive(Debug, Clone)]
pub struct RStar {
    /// One radius per surface vertex.
    pub values: Vec<f64>,
    pub blocks: Vec<RStarBlock>,
    /// The quotient cell-division the V block was solved on.
    pub quotient: WeightedTriangulation,
}

/// Solve every block: each Z element on its slice P_Z, and the quotient
/// circle pattern for the V block (product-normalized when Euclidean).
pub fn assemble_rstar(
    tri: &WeightedTriangulation,
    report: &SubsetReport,
    dec: &Decomposition,
    opts: &SolveOptions,
) -> Result<RStar> {
    if report.verdict != Verdict::Critical {
        return Err(Error::Precondition(
            "assemble_rstar requires a CRITICAL triangulation".into(),
        ));
    }
    let mut values = vec![0.0; tri.vertex_count()];
    let mut blocks = Vec::new();

    for (k, element) in dec.z_elements().iter().enumerate() {
        let solved = solve_limit_metric(tri, dec, element.z_mask, opts)?;
        for (&v, &r) in solved.vertices.iter().zip(&solved.radii) {
            values[v] = r;
        }
        blocks.push(RStarBlock {
            label: format!("Z{k}"),
            vertices: solved.vertices,
            radii: solved.radii,
            residual: solved.residual,
        });
    }

    let quotient = build_quotient(tri, dec, report)?;
    let q_report = crate::complex::classify(&quotient, &crate::complex::ClassifyOptions::default())?;
    let g = Geometry::for_triangulation(&quotient);
    let pattern = solve_circle_pattern(g, &quotient, &q_report, opts)?;
    let mut top_vertices = Vec::new();
    let mut top_radii = Vec::new();
    for q in 0..quotient.vertex_count() {
        let id = quotient.vertex_id(q);
        let v = tri
            .vertex_id_index(id)
            .ok_or_else(|| Error::Internal(format!("quotient vertex {id:?} not on the surface")))?;
        values[v] = pattern.radii[q];
        top_vertices.push(v);
        top_radii.push(pattern.radii[q]);
    }
    let order: Vec<usize> = {
        let mut idx: Vec<usize> = (0..top_vertices.len()).collect();
        idx.sort_by_key(|&i| top_vertices[i]);
        idx
    };
    blocks.push(RStarBlock {
        label: "V".into(),
        vertices: order.iter().map(|&i| top_vertices[i]).collect(),
        radii: order.iter().map(|&i| top_radii[i]).collect(),
        residual: pattern.residual,
    });

    Ok(RStar {
        values,
        blocks,
        quotient,
    })
}

impl RStar {
    /// Result document: blocks plus the flat vertex -> radius map.
    pub fn to_json(&self, tri: &WeightedTriangulation) -> serde_json::Value {
        let blocks: Vec<serde_json::Value> = self
            .blocks
            .iter()
            .map(|b| {
                serde_json::json!({
                    "element": b.label,
                    "vertices": b.vertices.iter().map(|&v| tri.vertex_id(v)).collect::<Vec<_>>(),
                    "r": b.radii,
                    "residual": b.residual,
                })
            })
            .collect();
        let rstar: std::collections::BTreeMap<String, f64> = (0..tri.vertex_count())
            .map(|v| (tri.vertex_id(v).to_string(), self.values[v]))
            .collect();
        serde_json::json!({ "blocks": blocks, "rstar": rstar })
    }
}

/// Verify a disk's limit metric residual against K_Z built from scratch.
pub fn kz_residual(disk: &DiskTriangulation, radii_interior: &[f64]) -> Result<f64> {
    let kz = limit_curvature_kz(disk, &interior_to_disk(disk, radii_interior))?;
    Ok(norm_inf(&kz))
}
