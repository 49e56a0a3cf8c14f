//! The blown-up geometry of a collapsing element: infinitesimal lengths,
//! limit angles and the curvature-like map K_Z on the disk.
//!
//! The limit is always Euclidean, whatever the surface geometry: collapse
//! happens at infinitesimal scale where the hyperbolic plane is flat.

use std::f64::consts::PI;

use crate::complex::DiskTriangulation;
use crate::error::{Error, Result};
use crate::geometry::trig::arccos_clamped;

/// Infinitesimal length L(e; r) = sqrt(r_v^2 + r_u^2 + 2 r_v r_u cos theta).
pub fn limit_length(weight: f64, r_v: f64, r_u: f64) -> f64 {
    (r_v * r_v + r_u * r_u + 2.0 * r_v * r_u * weight.cos()).sqrt()
}

fn interior_radius(disk: &DiskTriangulation, r_interior: &[f64], v: usize) -> Result<f64> {
    if !disk.is_interior(v) {
        return Err(Error::Internal(
            "limit angle requested a radius at a boundary vertex".into(),
        ));
    }
    Ok(r_interior[v])
}

/// Limit angle at an interior corner of a disk face. The face class j is
/// its interior-corner count:
/// - j = 3: Euclidean law of cosines on the infinitesimal lengths;
/// - j = 2: angle of the half-infinite strip configuration;
/// - j = 1: pi minus the opposite weight.
pub fn limit_angle(
    disk: &DiskTriangulation,
    face: usize,
    position: usize,
    r_interior: &[f64],
) -> Result<f64> {
    let f = &disk.faces()[face];
    let v = f.corners[position];
    if !disk.is_interior(v) {
        return Err(Error::Internal(
            "limit angles are defined at interior corners only".into(),
        ));
    }
    match disk.face_class(face) {
        3 => {
            let mut l = [0.0; 3];
            for k in 0..3 {
                let (e, _) = f.sides[k];
                let edge = &disk.edges()[e];
                l[k] = limit_length(
                    edge.weight,
                    interior_radius(disk, r_interior, edge.ends.0)?,
                    interior_radius(disk, r_interior, edge.ends.1)?,
                );
            }
            let (a, b, c) = (l[position], l[(position + 2) % 3], l[(position + 1) % 3]);
            arccos_clamped((a * a + b * b - c * c) / (2.0 * a * b))
        }
        2 => {
            let u_pos = (0..3)
                .find(|&k| k != position && disk.is_interior(f.corners[k]))
                .ok_or_else(|| Error::Internal("class-2 face lacks a second interior corner".into()))?;
            let w_pos = 3 - position - u_pos;
            let r_v = r_interior[v];
            let r_u = r_interior[f.corners[u_pos]];
            let theta_opp_u = disk.weight(disk.opposite_edge(face, u_pos));
            let theta_opp_v = disk.weight(disk.opposite_edge(face, position));
            let e_w = disk.opposite_edge(face, w_pos);
            let l = limit_length(disk.weight(e_w), r_v, r_u);
            arccos_clamped((r_v * theta_opp_u.cos() - r_u * theta_opp_v.cos()) / l)
        }
        1 => Ok(PI - disk.weight(disk.opposite_edge(face, position))),
        j => Err(Error::Internal(format!(
            "face class {j} encountered; disk faces must meet V_Z"
        ))),
    }
}

/// K_Z at every interior vertex: 2 pi minus the limit angles around it.
/// `r_interior` is indexed by disk vertices; only interior entries are read.
pub fn limit_curvature_kz(disk: &DiskTriangulation, r_interior: &[f64]) -> Result<Vec<f64>> {
    let mut cone = vec![0.0; disk.vertex_count()];
    for face in 0..disk.face_count() {
        let corners = disk.faces()[face].corners;
        for position in 0..3 {
            if disk.is_interior(corners[position]) {
                cone[corners[position]] += limit_angle(disk, face, position, r_interior)?;
            }
        }
    }
    Ok((0..disk.vertex_count())
        .filter(|&v| disk.is_interior(v))
        .map(|v| 2.0 * PI - cone[v])
        .collect())
}

/// Spread interior-indexed values into a disk-vertex-indexed buffer.
pub fn interior_to_disk(disk: &DiskTriangulation, interior_values: &[f64]) -> Vec<f64> {
    let mut out = vec![f64::NAN; disk.vertex_count()];
    let mut k = 0;
    for v in 0..disk.vertex_count() {
        if disk.is_interior(v) {
            out[v] = interior_values[k];
            k += 1;
        }
    }
    assert_eq!(k, interior_values.len());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{build_disk, classify, decompose, ClassifyOptions, DiagonalRule, DiskTriangulation};
    use crate::fixtures;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn disk_of(doc: &str, rule: DiagonalRule) -> DiskTriangulation {
        let t = fixtures::load(doc);
        let report = classify(&t, &ClassifyOptions::default()).unwrap();
        let dec = decompose(&t, &report).unwrap();
        // Largest element by size: the top-level component of Z_T.
        let z = report
            .z_family
            .iter()
            .max_by_key(|z| z.mask.count_ones())
            .unwrap()
            .mask;
        build_disk(&t, &dec, z, rule).unwrap()
    }

    fn random_interior(disk: &DiskTriangulation, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..disk.vertex_count())
            .map(|v| if disk.is_interior(v) { rng.gen_range(0.1..4.0) } else { f64::NAN })
            .collect()
    }

    #[test]
    fn limit_length_examples() {
        assert!((limit_length(std::f64::consts::FRAC_PI_2, 3.0, 4.0) - 5.0).abs() < 1e-12);
        assert!((limit_length(0.0, 1.0, 1.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn class_one_angle_is_pi_minus_weight() {
        let disk = disk_of(fixtures::REMARK_TORUS, DiagonalRule::Auto);
        let r = interior_to_disk(&disk, &[1.7]);
        for f in 0..disk.face_count() {
            let position = (0..3)
                .find(|&k| disk.is_interior(disk.faces()[f].corners[k]))
                .unwrap();
            let a = limit_angle(&disk, f, position, &r).unwrap();
            assert!((a - (PI - PI / 3.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn remark_kz_vanishes_for_every_metric() {
        let disk = disk_of(fixtures::REMARK_TORUS, DiagonalRule::Auto);
        for r_v1 in [0.1, 1.0, 5.0, 40.0] {
            let r = interior_to_disk(&disk, &[r_v1]);
            let kz = limit_curvature_kz(&disk, &r).unwrap();
            assert_eq!(kz.len(), 1);
            assert!(kz[0].abs() < 1e-12);
        }
    }

    #[test]
    fn kz_sums_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for (name, doc) in fixtures::CRITICAL {
            let t = fixtures::load(doc);
            let report = classify(&t, &ClassifyOptions::default()).unwrap();
            let dec = decompose(&t, &report).unwrap();
            for z in &report.z_family {
                let disk = build_disk(&t, &dec, z.mask, DiagonalRule::Auto).unwrap();
                for _ in 0..100 {
                    let r = random_interior(&disk, &mut rng);
                    let kz = limit_curvature_kz(&disk, &r).unwrap();
                    let total: f64 = kz.iter().sum();
                    assert!(total.abs() < 1e-10, "{name}: sum K_Z = {total}");
                }
            }
        }
    }

    #[test]
    fn kz_is_scale_invariant() {
        let disk = disk_of(fixtures::TORUS_PAIR_COLLAPSE, DiagonalRule::Auto);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let base_int: Vec<f64> = (0..disk.interior_count())
            .map(|_| rng.gen_range(0.2..3.0))
            .collect();
        let base = limit_curvature_kz(&disk, &interior_to_disk(&disk, &base_int)).unwrap();
        for c in [1e-3, 1.0, 1e3] {
            let scaled: Vec<f64> = base_int.iter().map(|&x| c * x).collect();
            let kz = limit_curvature_kz(&disk, &interior_to_disk(&disk, &scaled)).unwrap();
            for (a, b) in kz.iter().zip(&base) {
                assert!((a - b).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn kz_is_independent_of_the_diagonal_choice() {
        let d1 = disk_of(fixtures::TORUS_QUAD_NESTED, DiagonalRule::First);
        let d2 = disk_of(fixtures::TORUS_QUAD_NESTED, DiagonalRule::Second);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let interior: Vec<f64> = (0..d1.interior_count())
                .map(|_| rng.gen_range(0.1..5.0))
                .collect();
            let k1 = limit_curvature_kz(&d1, &interior_to_disk(&d1, &interior)).unwrap();
            let k2 = limit_curvature_kz(&d2, &interior_to_disk(&d2, &interior)).unwrap();
            for (a, b) in k1.iter().zip(&k2) {
                assert!((a - b).abs() < 1e-12, "diagonal choice changed K_Z: {a} vs {b}");
            }
        }
    }
}
