//! Reconstruction solver: nonnegativity-constrained least squares with a
//! smoothed total-variation penalty, minimized by a scaled gradient
//! projection (SGP) iteration with Barzilai–Borwein step lengths and a
//! nonmonotone line search.
//!
//! The iteration can stop early at a prefixed count, run to a relative
//! objective-decrease tolerance, and resume from a captured state with
//! bit-identical arithmetic — an interrupted-and-resumed run equals the
//! uninterrupted one exactly.

mod config;
mod objective;
mod sgp;
mod tv;

pub use config::{LineSearchConfig, SolverConfig};
pub use objective::{objective, objective_gradient};
pub use sgp::{
    compose_iterations_check, sgp_resume, sgp_solve, SgpState, SolveMode, SolveOptions,
    SolveReport, StopReason,
};
pub use tv::{tv_beta, tv_beta_gradient};

/// Errors raised by configuration validation and the SGP iteration.
#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("line search exhausted its backtracks at iteration {iteration}")]
    LineSearchFailed { iteration: usize },
    #[error("non-finite objective at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },
    #[error(transparent)]
    Tomo(#[from] rising_tomo::TomoError),
}
