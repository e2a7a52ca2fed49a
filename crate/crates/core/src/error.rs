use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Matrix shapes do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// An iterate picked up a NaN or infinite entry.
    #[error("non-finite entries after {context}")]
    NonFinite { context: String },

    /// The degree-5 exchange iteration ran out of refinement steps.
    #[error("Remez exchange did not converge on [{lo}, {hi}] after {iterations} iterations")]
    RemezNoConvergence { lo: f64, hi: f64, iterations: usize },

    /// A singular value decomposition failed to converge.
    #[error("SVD failed to converge")]
    Svd,

    /// Malformed matrix or schedule input.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A schedule file parsed but violates a structural invariant.
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    /// A method name could not be resolved.
    #[error("unknown method `{name}`; available: {}", available.join(", "))]
    UnknownMethod { name: String, available: Vec<String> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerics themselves, as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. } | Error::RemezNoConvergence { .. } | Error::Svd
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
