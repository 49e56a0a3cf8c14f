//! Metric quantities: lengths, angles, curvature, the blown-up limit
//! curvature of critical elements and finite-difference Jacobians.

mod curvature;
mod jacobian;
mod limit;
mod trig;

pub use curvature::{
    circle_center_distance, corner_angle, curvature, curvature_disk, edge_length, face_angles,
};
pub use jacobian::{curvature_jacobian, kz_jacobian, DEFAULT_FD_STEP};
pub use limit::{interior_to_disk, limit_angle, limit_curvature_kz, limit_length};
pub use trig::{arccos_clamped, arccosh_clamped};

/// Componentwise exponential: limit-metric radii from log coordinates.
pub fn interior_radii_from_coords(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&xi| xi.exp()).collect()
}

use crate::complex::WeightedTriangulation;
use crate::error::{Error, Result};

/// Background geometry of the universal cover, fixed by the Euler
/// characteristic: the plane for chi = 0, the hyperbolic plane otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Geometry {
    Euclidean,
    Hyperbolic,
}

impl Geometry {
    pub fn for_triangulation(tri: &WeightedTriangulation) -> Geometry {
        if tri.euler_characteristic() == 0 {
            Geometry::Euclidean
        } else {
            Geometry::Hyperbolic
        }
    }

    /// The conformal factor sigma_S in the flow equation.
    pub fn sigma(self, r: f64) -> f64 {
        match self {
            Geometry::Euclidean => r,
            Geometry::Hyperbolic => r.sinh(),
        }
    }

    /// The coordinate x_v = log r_v (Euclidean) or log tanh(r_v / 2)
    /// (hyperbolic). Strictly increasing; hyperbolic coordinates are
    /// negative.
    pub fn to_coordinate(self, r: f64) -> Result<f64> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Domain(format!("radius {r} must be positive and finite")));
        }
        match self {
            Geometry::Euclidean => Ok(r.ln()),
            // log tanh(r/2) = log1p(-e^-r) - log1p(e^-r), stable for all r.
            Geometry::Hyperbolic => Ok((-(-r).exp()).ln_1p() - (-r).exp().ln_1p()),
        }
    }

    /// Inverse of [`Geometry::to_coordinate`].
    pub fn from_coordinate(self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::Domain(format!("coordinate {x} must be finite")));
        }
        match self {
            // Keep radii (and their squares) comfortably inside f64 range.
            Geometry::Euclidean => {
                if x.abs() > 300.0 {
                    return Err(Error::Domain(format!(
                        "coordinate {x} is outside the representable radius range"
                    )));
                }
                Ok(x.exp())
            }
            Geometry::Hyperbolic => {
                if x >= 0.0 {
                    return Err(Error::Domain(format!(
                        "hyperbolic coordinate {x} must be negative"
                    )));
                }
                // r = 2 artanh(e^x) = log((1 + e^x)/(1 - e^x)).
                let em1 = x.exp_m1();
                Ok(((2.0 + em1) / -em1).ln())
            }
        }
    }
}

pub fn to_coordinates(g: Geometry, r: &[f64]) -> Result<Vec<f64>> {
    r.iter().map(|&v| g.to_coordinate(v)).collect()
}

pub fn from_coordinates(g: Geometry, x: &[f64]) -> Result<Vec<f64>> {
    x.iter().map(|&v| g.from_coordinate(v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_unit_radius_maps_to_zero() {
        assert_eq!(Geometry::Euclidean.to_coordinate(1.0).unwrap(), 0.0);
        assert_eq!(Geometry::Euclidean.from_coordinate(0.0).unwrap(), 1.0);
    }

    #[test]
    fn hyperbolic_roundtrip() {
        let g = Geometry::Hyperbolic;
        for &r in &[1e-6, 1e-3, 0.1, 1.0, 2.0, 5.0, 10.0, 20.0] {
            let x = g.to_coordinate(r).unwrap();
            assert!(x < 0.0);
            let back = g.from_coordinate(x).unwrap();
            assert!(
                (back - r).abs() < 1e-12 * r.max(1.0),
                "r = {r}: roundtrip gave {back}"
            );
        }
    }

    #[test]
    fn hyperbolic_coordinate_tends_to_zero_from_below() {
        let g = Geometry::Hyperbolic;
        let x1 = g.to_coordinate(20.0).unwrap();
        let x2 = g.to_coordinate(40.0).unwrap();
        assert!(x1 < 0.0 && x2 < 0.0);
        assert!(x2 > x1);
        assert!(x2.abs() < 1e-12);
    }

    #[test]
    fn nonpositive_radius_is_a_domain_error() {
        for g in [Geometry::Euclidean, Geometry::Hyperbolic] {
            assert!(g.to_coordinate(0.0).is_err());
            assert!(g.to_coordinate(-1.0).is_err());
        }
        assert!(Geometry::Hyperbolic.from_coordinate(0.0).is_err());
    }
}
