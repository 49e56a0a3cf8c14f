//! Central finite-difference Jacobians of the curvature maps in
//! logarithmic coordinates. These are the Hessians of the convex potentials
//! driving the flow and the Newton solves.

use nalgebra::DMatrix;

use crate::complex::{DiskTriangulation, WeightedTriangulation};
use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::limit::{interior_to_disk, limit_curvature_kz};
use crate::geometry::{curvature, from_coordinates, Geometry};

pub const DEFAULT_FD_STEP: f64 = 1e-5;

fn check_step(x: &[f64], h: f64) -> Result<()> {
    if !(h > 0.0) {
        return Err(Error::Step(format!("finite-difference step {h} must be positive")));
    }
    for &xi in x {
        if xi + h == xi || xi - h == xi {
            return Err(Error::Step(format!(
                "step {h} underflows at coordinate {xi}"
            )));
        }
    }
    Ok(())
}

fn fd_jacobian<F>(x: &[f64], h: f64, eval: F) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync + Send,
{
    check_step(x, h)?;
    let n = x.len();
    let columns: Vec<Result<Vec<f64>>> = exec::map_range(n, |u| {
        let mut plus = x.to_vec();
        let mut minus = x.to_vec();
        plus[u] += h;
        minus[u] -= h;
        let kp = eval(&plus)?;
        let km = eval(&minus)?;
        Ok(kp
            .iter()
            .zip(&km)
            .map(|(p, m)| (p - m) / (2.0 * h))
            .collect())
    });
    let mut j = DMatrix::zeros(n, n);
    for (u, col) in columns.into_iter().enumerate() {
        let col = col?;
        for v in 0..n {
            j[(v, u)] = col[v];
        }
    }
    Ok(j)
}

/// J[v][u] = d K_v(R_S(x)) / d x_u by central differences. Symmetric up to
/// FD error; Euclidean rows sum to zero.
pub fn curvature_jacobian(
    g: Geometry,
    tri: &WeightedTriangulation,
    x: &[f64],
    h: f64,
) -> Result<DMatrix<f64>> {
    fd_jacobian(x, h, |xs| {
        let r = from_coordinates(g, xs)?;
        curvature(g, tri, &r)
    })
}

/// Jacobian of K_Z in logarithmic coordinates on the interior vertices.
pub fn kz_jacobian(disk: &DiskTriangulation, x_interior: &[f64], h: f64) -> Result<DMatrix<f64>> {
    fd_jacobian(x_interior, h, |xs| {
        let r: Vec<f64> = xs.iter().map(|&x| x.exp()).collect();
        limit_curvature_kz(disk, &interior_to_disk(disk, &r))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{build_disk, classify, decompose, ClassifyOptions, DiagonalRule};
    use crate::fixtures;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn jacobian_is_symmetric_with_zero_row_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for (doc, g) in [
            (fixtures::TORUS_SUBCRITICAL, Geometry::Euclidean),
            (fixtures::GENUS2_SUBCRITICAL, Geometry::Hyperbolic),
        ] {
            let t = fixtures::load(doc);
            let x: Vec<f64> = (0..t.vertex_count())
                .map(|_| rng.gen_range(-1.5..-0.1))
                .collect();
            let j = curvature_jacobian(g, &t, &x, DEFAULT_FD_STEP).unwrap();
            let n = x.len();
            for a in 0..n {
                for b in 0..n {
                    assert!(
                        (j[(a, b)] - j[(b, a)]).abs() < 1e-6,
                        "J not symmetric at ({a},{b})"
                    );
                }
            }
            if g == Geometry::Euclidean {
                for a in 0..n {
                    let row: f64 = (0..n).map(|b| j[(a, b)]).sum();
                    assert!(row.abs() < 1e-6, "row {a} sums to {row}");
                }
            }
        }
    }

    #[test]
    fn diagonal_negative_offdiagonal_positive() {
        // Sign pattern of the angle derivatives transfers to -K: the
        // curvature Jacobian has positive diagonal, nonpositive off-diagonal.
        let t = fixtures::load(fixtures::TORUS_SUBCRITICAL);
        let x = vec![0.1, -0.2, 0.05];
        let j = curvature_jacobian(Geometry::Euclidean, &t, &x, DEFAULT_FD_STEP).unwrap();
        for a in 0..3 {
            assert!(j[(a, a)] > 0.0);
            for b in 0..3 {
                if a != b {
                    assert!(j[(a, b)] <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn kz_jacobian_is_psd_with_ones_kernel() {
        let t = fixtures::load(fixtures::TORUS_QUAD_NESTED);
        let report = classify(&t, &ClassifyOptions::default()).unwrap();
        let dec = decompose(&t, &report).unwrap();
        let z = report.z_family.iter().max_by_key(|z| z.mask.count_ones()).unwrap().mask;
        let disk = build_disk(&t, &dec, z, DiagonalRule::Auto).unwrap();
        let n = disk.interior_count();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let j = kz_jacobian(&disk, &x, DEFAULT_FD_STEP).unwrap();
            let sym = (j.clone() + j.transpose()) * 0.5;
            let eigen = sym.symmetric_eigenvalues();
            let min = eigen.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(min > -1e-8, "min eigenvalue {min}");
            let ones = nalgebra::DVector::from_element(n, 1.0 / (n as f64).sqrt());
            let residual = (&j * &ones).norm();
            assert!(residual < 1e-6, "kernel residual {residual}");
        }
    }

    #[test]
    fn underflowing_step_is_reported() {
        let t = fixtures::load(fixtures::MINIMAL_TORUS);
        let x = vec![1e12];
        assert!(matches!(
            curvature_jacobian(Geometry::Euclidean, &t, &x, 1e-5),
            Err(Error::Step(_))
        ));
    }
}
