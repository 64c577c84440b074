use tabbench_analysis::AnalysisError;
use tabbench_opt::OptimizerError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid options: {0}")]
    Invalid(String),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Table(#[from] tabbench_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
