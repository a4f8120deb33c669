//! Error types shared across the library.

use crate::grid::GridFunction;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the inputs was violated.
    #[error("domain error: {0}")]
    Domain(String),

    /// The ODE integrator could not continue. Carries the last valid state
    /// so callers can report where the trajectory died.
    #[error("integration failure at x={x}: step size underflow (u={u}, v={v})")]
    Integration { x: f64, u: f64, v: f64 },

    /// An iterative scheme ran out of budget before meeting its tolerance.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// The path deformation stalled; the best iterate rides along so callers
    /// can inspect how close it got.
    #[error("convergence failure: mountain pass not converged (gradient norm {gradient_norm:.3e}, energy {energy:.6e})")]
    MountainPass {
        gradient_norm: f64,
        energy: f64,
        best: Box<GridFunction>,
    },
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn convergence(msg: impl Into<String>) -> Self {
        Error::Convergence(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
