//! Circle patterns on weighted triangulations and the combinatorial Ricci
//! flow, including the degenerate (critical) regime.
//!
//! The crate analyzes a weighted triangulation of a closed oriented surface
//! with nonpositive Euler characteristic:
//!
//! - [`complex`] holds the combinatorics: the surface, subset enumeration
//!   with the obstruction functional phi, the collapse hierarchy of
//!   critical subsets and the per-element disk triangulations.
//! - [`geometry`] computes lengths, angles, curvatures, the blown-up limit
//!   curvature K_Z and finite-difference Jacobians.
//! - [`flow`] integrates the Ricci flow in logarithmic coordinates and
//!   diagnoses convergence or collapse.
//! - [`solver`] finds circle pattern metrics and limit metrics by damped
//!   Newton iteration, and assembles the degeneracy order r*.
//! - [`verify`] carries independent brute-force oracles for the key
//!   identities, usable on arbitrary inputs.
//!
//! With the default `parallel` feature the batch loops (subset scan,
//! Jacobian columns, oracle batteries) run on rayon; disabling it yields a
//! sequential build with identical outputs.

pub mod complex;
pub mod error;
mod exec;
pub mod fixtures;
pub mod flow;
pub mod geometry;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
