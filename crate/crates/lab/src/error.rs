use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    MissingInput(String),
    #[error("{message}")]
    Divergence { message: String, epochs_completed: usize },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] sglr_core::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl LabError {
    /// Process exit status: 1 validation, 2 missing input, 3 divergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::MissingInput(_) => 2,
            LabError::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => 2,
            LabError::Divergence { .. } | LabError::Core(sglr_core::Error::Divergence(_)) => 3,
            _ => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io { path: path.into(), source }
    }
}

pub type LabResult<T> = Result<T, LabError>;
