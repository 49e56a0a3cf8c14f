//! Edge lengths, corner angles and vertex curvature on the surface and on
//! disk triangulations.

use std::f64::consts::PI;

use crate::complex::{Corner, DiskTriangulation, WeightedTriangulation};
use crate::error::{Error, Result};
use crate::geometry::trig::{arccos_clamped, hyperbolic_angle_cos, hyperbolic_center_distance};
use crate::geometry::Geometry;

/// Distance between the centers of two circles of radii `r_v`, `r_u`
/// meeting at angle `theta`.
pub fn circle_center_distance(g: Geometry, r_v: f64, r_u: f64, theta: f64) -> Result<f64> {
    match g {
        Geometry::Euclidean => {
            Ok((r_v * r_v + r_u * r_u + 2.0 * r_v * r_u * theta.cos()).sqrt())
        }
        Geometry::Hyperbolic => hyperbolic_center_distance(r_v, r_u, theta.cos()),
    }
}

/// Length of an edge under the metric `r` (radii per vertex).
pub fn edge_length(g: Geometry, tri: &WeightedTriangulation, e: usize, r: &[f64]) -> Result<f64> {
    let edge = tri.edge(e);
    circle_center_distance(g, r[edge.ends.0], r[edge.ends.1], edge.weight)
}

fn angle_from_lengths(g: Geometry, adjacent_a: f64, adjacent_b: f64, opposite: f64) -> Result<f64> {
    let cos = match g {
        Geometry::Euclidean => {
            (adjacent_a * adjacent_a + adjacent_b * adjacent_b - opposite * opposite)
                / (2.0 * adjacent_a * adjacent_b)
        }
        Geometry::Hyperbolic => hyperbolic_angle_cos(adjacent_a, adjacent_b, opposite),
    };
    arccos_clamped(cos)
}

/// The three side lengths of a face, by position.
fn side_lengths(
    g: Geometry,
    tri: &WeightedTriangulation,
    f: usize,
    r: &[f64],
) -> Result<[f64; 3]> {
    let sides = &tri.faces()[f].sides;
    Ok([
        edge_length(g, tri, sides[0].edge, r)?,
        edge_length(g, tri, sides[1].edge, r)?,
        edge_length(g, tri, sides[2].edge, r)?,
    ])
}

/// Angle at a corner via the (hyperbolic) law of cosines.
pub fn corner_angle(
    g: Geometry,
    tri: &WeightedTriangulation,
    corner: Corner,
    r: &[f64],
) -> Result<f64> {
    let l = side_lengths(g, tri, corner.face, r)?;
    let i = corner.position;
    angle_from_lengths(g, l[i], l[(i + 2) % 3], l[(i + 1) % 3])
}

/// All three corner angles of a face.
pub fn face_angles(
    g: Geometry,
    tri: &WeightedTriangulation,
    f: usize,
    r: &[f64],
) -> Result<[f64; 3]> {
    let l = side_lengths(g, tri, f, r)?;
    Ok([
        angle_from_lengths(g, l[0], l[2], l[1])?,
        angle_from_lengths(g, l[1], l[0], l[2])?,
        angle_from_lengths(g, l[2], l[1], l[0])?,
    ])
}

/// Curvature K_v = 2 pi - (sum of corner angles at v) for every vertex.
pub fn curvature(g: Geometry, tri: &WeightedTriangulation, r: &[f64]) -> Result<Vec<f64>> {
    if r.len() != tri.vertex_count() {
        return Err(Error::Domain(format!(
            "metric has {} entries for {} vertices",
            r.len(),
            tri.vertex_count()
        )));
    }
    let mut cone = vec![0.0; tri.vertex_count()];
    for f in 0..tri.face_count() {
        let angles = face_angles(g, tri, f, r)?;
        let cv = tri.face_corner_vertices(f);
        for k in 0..3 {
            cone[cv[k]] += angles[k];
        }
    }
    Ok(cone.into_iter().map(|a| 2.0 * PI - a).collect())
}

/// Euclidean disk curvature: 2 pi - a_v at interior vertices, pi - a_v on
/// the boundary. `r` is indexed by disk vertices (boundary copies have
/// their own radii). The total is 2 pi.
pub fn curvature_disk(disk: &DiskTriangulation, r: &[f64]) -> Result<Vec<f64>> {
    if r.len() != disk.vertex_count() {
        return Err(Error::Domain(format!(
            "disk metric has {} entries for {} vertices",
            r.len(),
            disk.vertex_count()
        )));
    }
    let mut cone = vec![0.0; disk.vertex_count()];
    for face in disk.faces() {
        let mut l = [0.0; 3];
        for k in 0..3 {
            let (e, _) = face.sides[k];
            let edge = &disk.edges()[e];
            l[k] = circle_center_distance(
                Geometry::Euclidean,
                r[edge.ends.0],
                r[edge.ends.1],
                edge.weight,
            )?;
        }
        for k in 0..3 {
            let angle =
                angle_from_lengths(Geometry::Euclidean, l[k], l[(k + 2) % 3], l[(k + 1) % 3])?;
            cone[face.corners[k]] += angle;
        }
    }
    Ok((0..disk.vertex_count())
        .map(|v| {
            if disk.is_interior(v) {
                2.0 * PI - cone[v]
            } else {
                PI - cone[v]
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{build_disk, classify, decompose, ClassifyOptions, DiagonalRule};
    use crate::fixtures;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn euclidean_right_angle_gives_pythagoras() {
        let d = circle_center_distance(Geometry::Euclidean, 3.0, 4.0, PI / 2.0).unwrap();
        assert!((d - 5.0).abs() < 1e-12);
    }

    #[test]
    fn tangent_circles_add_radii() {
        let d = circle_center_distance(Geometry::Euclidean, 1.0, 2.0, 0.0).unwrap();
        assert!((d - 3.0).abs() < 1e-12);
        let h = circle_center_distance(Geometry::Hyperbolic, 1.0, 2.0, 0.0).unwrap();
        assert!((h - 3.0).abs() < 1e-12);
    }

    #[test]
    fn equilateral_euclidean_angles() {
        let t = fixtures::load(fixtures::MINIMAL_TORUS);
        let r = vec![1.0];
        for f in 0..t.face_count() {
            for position in 0..3 {
                let a = corner_angle(Geometry::Euclidean, &t, Corner { face: f, position }, &r)
                    .unwrap();
                assert!((a - PI / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hyperbolic_equilateral_angle_is_below_euclidean() {
        let t = fixtures::load(fixtures::GENUS2_OCTAGON);
        let r = vec![1.0];
        for f in 0..t.face_count() {
            let a = corner_angle(Geometry::Hyperbolic, &t, Corner { face: f, position: 0 }, &r)
                .unwrap();
            // Independent check via the law of cosines on explicit numbers.
            let l = (1.0f64.cosh().powi(2) + 1.0f64.sinh().powi(2) * (PI / 6.0).cos()).acosh();
            let expected = ((l.cosh() * l.cosh() - l.cosh()) / (l.sinh() * l.sinh())).acos();
            assert!((a - expected).abs() < 1e-12);
            assert!(a < PI / 3.0);
        }
    }

    #[test]
    fn right_angle_weights_give_equilateral_root_two() {
        // Theta = pi/2 and unit radii: every length is sqrt(2), angles pi/3.
        let d = circle_center_distance(Geometry::Euclidean, 1.0, 1.0, PI / 2.0).unwrap();
        assert!((d - 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn minimal_torus_curvature_vanishes_identically() {
        let t = fixtures::load(fixtures::MINIMAL_TORUS);
        for r in [vec![1.0], vec![0.2], vec![7.5]] {
            let k = curvature(Geometry::Euclidean, &t, &r).unwrap();
            assert!(k[0].abs() < 1e-12);
        }
    }

    #[test]
    fn euclidean_total_curvature_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (name, doc) in fixtures::EUCLIDEAN {
            let t = fixtures::load(doc);
            for _ in 0..100 {
                let r: Vec<f64> = (0..t.vertex_count())
                    .map(|_| rng.gen_range(0.1..5.0))
                    .collect();
                let k = curvature(Geometry::Euclidean, &t, &r).unwrap();
                let total: f64 = k.iter().sum();
                assert!(total.abs() < 1e-10, "{name}: total {total}");
            }
        }
    }

    #[test]
    fn euclidean_curvature_is_scale_invariant() {
        let t = fixtures::load(fixtures::TORUS_SUBCRITICAL);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let r: Vec<f64> = (0..t.vertex_count())
            .map(|_| rng.gen_range(0.5..2.0))
            .collect();
        let base = curvature(Geometry::Euclidean, &t, &r).unwrap();
        for c in [1e-3, 2.0, 1e3] {
            let scaled: Vec<f64> = r.iter().map(|&x| c * x).collect();
            let k = curvature(Geometry::Euclidean, &t, &scaled).unwrap();
            for (a, b) in k.iter().zip(&base) {
                assert!((a - b).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn single_triangle_disk_total_curvature() {
        use crate::complex::{DiskEdge, DiskFace};
        let disk = DiskTriangulation::from_components(
            vec!["a".into(), "b".into(), "c".into()],
            vec![0, 1, 2],
            vec![
                DiskEdge { id: "ab".into(), ends: (0, 1), weight: 0.3, original: None },
                DiskEdge { id: "bc".into(), ends: (1, 2), weight: 0.7, original: None },
                DiskEdge { id: "ca".into(), ends: (2, 0), weight: 0.1, original: None },
            ],
            vec![DiskFace {
                sides: [(0, true), (1, true), (2, true)],
                corners: [0, 1, 2],
            }],
        )
        .unwrap();
        let k = curvature_disk(&disk, &[1.0, 2.0, 0.5]).unwrap();
        let total: f64 = k.iter().sum();
        assert!((total - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn remark_disk_total_curvature_is_two_pi() {
        let t = fixtures::load(fixtures::REMARK_TORUS);
        let report = classify(&t, &ClassifyOptions::default()).unwrap();
        let dec = decompose(&t, &report).unwrap();
        let disk = build_disk(&t, &dec, report.z_t, DiagonalRule::Auto).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let r: Vec<f64> = (0..disk.vertex_count())
                .map(|_| rng.gen_range(0.1..4.0))
                .collect();
            let k = curvature_disk(&disk, &r).unwrap();
            let total: f64 = k.iter().sum();
            assert!((total - 2.0 * PI).abs() < 1e-10);
        }
    }
}
