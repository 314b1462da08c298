use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A physical or numerical parameter is outside its valid range.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// A circuit or channel violates a structural invariant.
    #[error("malformed structure: {0}")]
    Structure(String),

    /// Input data cannot be processed (too few points, missing values).
    #[error("invalid input: {0}")]
    Input(String),

    #[error("computation failed: {0}")]
    Computation(String),
}

impl Error {
    pub(crate) fn parameter(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }
}
