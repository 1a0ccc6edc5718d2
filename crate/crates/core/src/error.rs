use thiserror::Error;

/// Errors raised by the operator algebra, model builders and solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// Two operands live on different basis spaces.
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    /// A documented precondition does not hold.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A dense object would exceed the configured dimension cap.
    #[error("dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    /// `true` for errors caused by the caller (bad input or configuration)
    /// rather than by the computation itself.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Contract(_) | Error::SpaceMismatch(_) | Error::DimensionCap { .. } | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
