use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] contest_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("truth file {path} does not match the published commitment {expected}")]
    CommitmentMismatch { path: PathBuf, expected: String },

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Self::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    /// 0 success, 2 validation, 3 commitment mismatch, 4 simulation budget, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use contest_core::Error as E;
        match self {
            CliError::Core(E::SimulationBudget { .. }) => 4,
            CliError::Core(
                E::Validation(_) | E::Config(_) | E::EnumerationBudget { .. } | E::UndefinedRate(_),
            )
            | CliError::Parse { .. }
            | CliError::Usage(_) => 2,
            CliError::CommitmentMismatch { .. } => 3,
            CliError::Core(_) | CliError::Io { .. } => 1,
        }
    }
}
