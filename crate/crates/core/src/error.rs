use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("empty split: {0}")]
    EmptySplit(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("{0}")]
    Mismatch(String),

    #[error("non-finite gradient in {table} row {row}")]
    NonFiniteGradient { table: String, row: usize },

    #[error("non-finite {what} at step {step}")]
    NonFiniteLoss { what: String, step: u64 },

    #[error("{0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by inputs (config, data, checkpoints) rather
    /// than by the program itself.
    pub fn is_user_error(&self) -> bool {
        !matches!(
            self,
            Error::NonFiniteGradient { .. } | Error::NonFiniteLoss { .. } | Error::Internal(_)
        )
    }
}
