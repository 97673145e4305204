//! Crate-wide error type.
//!
//! Every fallible public operation returns [`Result`]. The variants are
//! grouped by pipeline stage so that a command-line caller can map them onto
//! coarse exit categories:
//!
//! * configuration / input errors — malformed expressions, invalid material
//!   data, inconsistent initial data;
//! * forward-solve errors — a Newton step of the integrator failed;
//! * optimizer errors — an inner solve or an iteration cap failed inside the
//!   static or dynamic optimizer.

use crate::dynamics::RodState;

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// All failure modes of the rod solvers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A material-law expression could not be parsed.
    #[error("parse error at column {column}: {message}")]
    ExprParse {
        /// 1-based column in the source string.
        column: usize,
        /// What went wrong.
        message: String,
    },

    /// A material-law expression failed to evaluate at a point.
    #[error("cannot evaluate `{subexpr}` at s = {s}: {message}")]
    ExprEval {
        /// Pretty-printed offending subexpression.
        subexpr: String,
        /// Arclength sample where evaluation failed.
        s: f64,
        /// What went wrong (division by zero, domain error, overflow, ...).
        message: String,
    },

    /// Material data violated a positivity/sign requirement.
    #[error("invalid material data: {0}")]
    InvalidParams(String),

    /// Mesh sizes or other constructor inputs were out of range.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The per-step Newton solve of the integrator did not converge.
    ///
    /// Carries the final residual and iterate so the caller can inspect the
    /// blow-up or retry with a smaller time step.
    #[error(
        "time step at t = {t} failed: Newton residual {residual:.3e} after {iters} iterations"
    )]
    StepFailed {
        /// Time at the beginning of the failed step.
        t: f64,
        /// Max-norm residual at the last iterate.
        residual: f64,
        /// Newton iterations performed.
        iters: usize,
        /// Last iterate (positions and tensions as far as they got).
        iterate: Box<RodState>,
    },

    /// A banded LU factorization hit an exactly zero pivot.
    #[error("singular banded matrix: zero pivot at elimination column {column}")]
    SingularMatrix {
        /// Elimination column (unknown index) with no usable pivot.
        column: usize,
    },

    /// Control synthesis found curvature a stationary control cannot produce.
    #[error(
        "control synthesis failed at node {node}: curvature magnitude {curvature:.6e} \
         but the curvature bound there is zero"
    )]
    Synthesis {
        /// Node index where synthesis failed.
        node: usize,
        /// Curvature magnitude found at that node.
        curvature: f64,
    },

    /// The inner quasi-Newton solve of the static optimizer stalled.
    #[error(
        "static inner solve failed: residual {residual:.3e} after {iters} iterations \
         (penalty escalations exhausted)"
    )]
    StaticInnerFailed {
        /// Max-norm residual at the last iterate.
        residual: f64,
        /// Iterations performed in the last attempt.
        iters: usize,
    },

    /// The static optimizer's outer loop hit its iteration cap.
    #[error("static outer loop hit the iteration cap of {cap} (last objective change {last_change:.3e})")]
    StaticOuterCap {
        /// Outer iteration cap.
        cap: usize,
        /// Last observed objective change.
        last_change: f64,
    },

    /// The backward (adjoint) sweep failed at a time level.
    #[error("adjoint solve failed at time level {level}: {message}")]
    AdjointFailed {
        /// Time level (step index) where the backward sweep failed.
        level: usize,
        /// What went wrong.
        message: String,
    },

    /// Projected gradient descent hit its iteration cap without converging.
    #[error("gradient descent hit the iteration cap of {cap} (last control change {last_change:.3e})")]
    DescentCap {
        /// Iteration cap.
        cap: usize,
        /// Last max-norm control update.
        last_change: f64,
    },

    /// Underlying I/O failure (propagated from the caller's readers/writers).
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by user-supplied configuration or input data.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::ExprParse { .. }
                | Error::ExprEval { .. }
                | Error::InvalidParams(_)
                | Error::InvalidInput(_)
        )
    }

    /// True for failures of the forward (time-stepping) solver.
    pub fn is_forward_error(&self) -> bool {
        matches!(self, Error::StepFailed { .. })
    }

    /// True for failures inside an optimization loop.
    pub fn is_optimizer_error(&self) -> bool {
        matches!(
            self,
            Error::SingularMatrix { .. }
                | Error::Synthesis { .. }
                | Error::StaticInnerFailed { .. }
                | Error::StaticOuterCap { .. }
                | Error::AdjointFailed { .. }
                | Error::DescentCap { .. }
        )
    }
}
