use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error(transparent)]
    Model(#[from] chemcomp::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("replay mismatch: {0}")]
    Mismatch(String),
}

impl HarnessError {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        HarnessError::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for capacity limits, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Model(chemcomp::Error::Capacity { .. }) => 2,
            _ => 1,
        }
    }
}
