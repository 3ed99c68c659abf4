//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("scenario index {index} out of range (operator has {count} scenarios)")]
    ScenarioOutOfRange { index: usize, count: usize },

    #[error("horizon mismatch: expected {expected}, got {got}")]
    HorizonMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("rejected input: {0}")]
    RejectedInput(String),

    #[error("enumeration budget exceeded: {required} paths required, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u64 },

    #[error("reference oracle failed: {0}")]
    OracleFailure(String),

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn rejected(msg: impl Into<String>) -> Self {
        Error::RejectedInput(msg.into())
    }
}
