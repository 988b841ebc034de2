//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A schedule violates the one-subband-per-slot or permutation constraint.
    #[error("invalid pattern: {0}")]
    InvalidPattern(String),

    /// A caller-supplied value is outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A grid coordinate is outside `{0,...,k-1}`.
    #[error("index out of range: {0}")]
    OutOfRange(String),

    /// The iterative recovery produced a non-finite objective.
    #[error("recovery diverged: {0}")]
    Divergence(String),

    /// Budget tightening could not find any admissible budget.
    #[error("no admissible collinearity budget: {0}")]
    BudgetExhausted(String),

    /// Too many realizations of a sweep failed.
    #[error("sweep aborted: {0}")]
    SweepAborted(String),

    /// A per-shift recovery failed inside the evaluation protocol.
    #[error("recovery failed at cyclic shift {shift}: {source}")]
    ShiftEvaluation {
        shift: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed {what}: {msg}")]
    Parse { what: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid_argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
