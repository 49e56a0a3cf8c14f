//! Error taxonomy shared by every module of the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// The input document does not match the expected JSON schema.
    #[error("schema error: {0}")]
    Schema(String),

    /// The combinatorial data do not describe a closed oriented surface
    /// of the admitted kind.
    #[error("topology error: {0}")]
    Topology(String),

    /// An edge weight lies outside [0, pi/2].
    #[error("weight error: {0}")]
    Weight(String),

    /// The vertex count exceeds the configured enumeration cap.
    #[error("size error: {0}")]
    Size(String),

    /// An internal consistency assertion failed. These correspond to
    /// statements that are theorems for valid inputs; seeing one means the
    /// input (or this library) is broken.
    #[error("internal error: {0}")]
    Internal(String),

    /// A numeric argument left its analytic domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A finite-difference step underflowed relative to the base point.
    #[error("step error: {0}")]
    Step(String),

    /// The adaptive integrator collapsed its step size below the floor.
    #[error("stiffness error: {0}")]
    Stiffness(String),

    /// The requested ratio basepoint does not lie in `V_0`.
    #[error("basepoint error: {0}")]
    Basepoint(String),

    /// A precondition of the called operation does not hold.
    #[error("precondition error: {0}")]
    Precondition(String),

    /// Newton failed to reach the residual tolerance. Carries the best
    /// iterate found (as radii) and its residual so callers can inspect it.
    #[error("no convergence: residual {residual:.3e} after {iterations} iterations")]
    NoConvergence {
        best: Vec<f64>,
        residual: f64,
        iterations: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
