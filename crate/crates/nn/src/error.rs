use thiserror::Error;

pub type Result<T> = std::result::Result<T, NnError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("{op}: shape mismatch, expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        op: &'static str,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("{0}: backward called without a saved training-mode forward pass")]
    BackwardBeforeForward(&'static str),
    #[error("invalid layer configuration: {0}")]
    InvalidConfig(String),
    #[error("state tensor {name}: {reason}")]
    State { name: String, reason: String },
}

pub(crate) fn shape_err(op: &'static str, expected: &[usize], got: &[usize]) -> NnError {
    NnError::ShapeMismatch {
        op,
        expected: expected.to_vec(),
        got: got.to_vec(),
    }
}
