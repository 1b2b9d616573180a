use std::path::PathBuf;

use saclab_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{0}")]
    Diverged(String),
    #[error("i/o error on {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed JSON in {}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type LabResult<T> = Result<T, LabError>;

impl LabError {
    pub fn config(msg: impl Into<String>) -> Self {
        LabError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io { path: path.into(), source }
    }

    /// Process exit status for the command line: 2 for configuration
    /// problems, 3 for instances that violate the ergodicity or exploration
    /// assumptions, 4 for diverged runs and 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) | LabError::Json { .. } => 2,
            LabError::Core(CoreError::Parameter(_)) => 2,
            LabError::Core(_) => 3,
            LabError::Diverged(_) => 4,
            LabError::Io { .. } | LabError::Csv(_) => 1,
        }
    }
}
