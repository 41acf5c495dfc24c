use thiserror::Error;

/// Errors produced by the toolkit's operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Inputs that must agree on shape or dimensions do not.
    #[error("{context}: expected {expected}, got {actual}")]
    ShapeMismatch {
        context: String,
        expected: String,
        actual: String,
    },
    /// An argument violates a documented precondition.
    #[error("{0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn shape(
        context: impl Into<String>,
        expected: impl Into<String>,
        actual: impl Into<String>,
    ) -> Self {
        Error::ShapeMismatch {
            context: context.into(),
            expected: expected.into(),
            actual: actual.into(),
        }
    }

    /// Prefix the error message with the pipeline stage that produced it.
    pub(crate) fn at_stage(self, stage: &str) -> Self {
        match self {
            Error::ShapeMismatch {
                context,
                expected,
                actual,
            } => Error::ShapeMismatch {
                context: format!("{stage}: {context}"),
                expected,
                actual,
            },
            Error::InvalidInput(msg) => Error::InvalidInput(format!("{stage}: {msg}")),
        }
    }
}
