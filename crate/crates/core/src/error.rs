use std::io;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration space: {0}")]
    InvalidSpace(String),

    #[error("position {position} out of range for parameter `{param}` ({cardinality} values)")]
    Domain {
        param: String,
        position: usize,
        cardinality: usize,
    },

    #[error("expected {expected} value positions, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("config index {index} out of range (cardinality {cardinality})")]
    IndexOutOfRange { index: usize, cardinality: usize },

    #[error("budget {budget} outside [1, {max_epochs}]")]
    BudgetOutOfRange { budget: usize, max_epochs: usize },

    #[error("table integrity: {0}")]
    Integrity(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("non-finite or negative value {value} at config {index}")]
    NonFinite { index: usize, value: f64 },

    #[error(transparent)]
    Io(#[from] io::Error),
}
