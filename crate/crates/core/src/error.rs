//! Shared error type for the simulation core.

use thiserror::Error;

pub type CoreResult<T> = Result<T, CoreError>;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },

    #[error("matrix dimension {dim} outside supported range 1..={max}")]
    DimOutOfRange { dim: usize, max: usize },

    #[error("non-finite entry encountered in {context}")]
    NonFinite { context: String },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("step-size failure: {0}")]
    StepSize(String),

    #[error("inconclusive run: {0}")]
    Inconclusive(String),
}
