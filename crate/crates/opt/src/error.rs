use thiserror::Error;

#[derive(Debug, Error)]
pub enum OptimizerError {
    /// The strategy's own stopping rule was reached.
    #[error("optimizer exhausted: {0}")]
    Exhausted(String),
    #[error("invalid setting: {0}")]
    Invalid(String),
    /// An observation that does not answer the pending suggestion.
    #[error("unexpected observation: {0}")]
    Protocol(String),
    #[error(transparent)]
    Space(#[from] tabbench_core::Error),
}

pub type Result<T, E = OptimizerError> = std::result::Result<T, E>;
