//! Error type shared across the crate.

/// Errors reported by path, partition and calculus operations.
///
/// Non-convergence of a limiting procedure is in general *not* an error:
/// sweep-style operations return reports carrying a [`Verdict`](crate::report::Verdict)
/// instead, so that a diverging experiment still produces inspectable output.
/// The [`Error::Diverged`] variant is reserved for operations that must return
/// a single number (derivative schedules, quadrature) and cannot.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("consistency check failed: {0}")]
    Consistency(String),

    #[error("did not converge: {0}")]
    Diverged(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
