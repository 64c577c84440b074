use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("empty input: {0}")]
    Empty(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    /// The requested statistic has no value for this input (zero variance,
    /// zero reference error, ...).
    #[error("undefined: {0}")]
    Undefined(String),
    #[error(transparent)]
    Table(#[from] tabbench_core::Error),
}

pub type Result<T, E = AnalysisError> = std::result::Result<T, E>;
