//! Harness-level errors: I/O, file formats, and dataset validation.

use std::path::PathBuf;

use streameval_core::EvalError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: not a supported npy file: {reason}")]
    Npy { path: PathBuf, reason: String },

    #[error("{path}: not a supported mask png: {reason}")]
    Png { path: PathBuf, reason: String },

    #[error("{path}: malformed csv: {reason}")]
    Csv { path: PathBuf, reason: String },

    #[error("validation: {0}")]
    Validation(String),

    #[error(transparent)]
    Metric(#[from] EvalError),

    #[error("usage: {0}")]
    Usage(String),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Exit code class: 2 for usage errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
