pub type Result<T, E = GridError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum GridError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("dataset: {0}")]
    Data(String),

    #[error("training spec: {0}")]
    Spec(String),

    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: String, message: String },

    #[error(transparent)]
    Table(#[from] tabbench_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
