//! Error taxonomy shared by every module.
//!
//! Errors map onto the CLI exit-code contract:
//! invalid input → 2, budget exceeded → 3, everything else (alarms,
//! non-convergence surfaced as failures) → 1.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad user-supplied parameter (exit code 2).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A configured budget (memory, ceiling, loop size) would be exceeded (exit code 3).
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    /// Adaptive quadrature refinements failed to agree.
    #[error("quadrature did not converge: {0}")]
    QuadratureNonConvergence(String),

    /// Iterative solver (power iteration, zero bisection) stalled.
    #[error("iteration did not converge: {0}")]
    NonConvergence(String),

    /// Evaluation at a pole (ζ(1, a), principal L at s = 1).
    #[error("evaluation at a pole: {0}")]
    PoleAt(String),
}

impl Error {
    /// Exit code for the CLI contract (0 = success is not represented here).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) => 2,
            Error::BudgetExceeded(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
