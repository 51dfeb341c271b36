use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = LabError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("output error: {0}")]
    Output(String),
}

impl LabError {
    /// Process exit status: 2 config, 3 cap or precondition, 4 failed check.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => 2,
            LabError::Precondition(_) => 3,
            LabError::Verification(_) => 4,
            LabError::Io { .. } | LabError::Output(_) => 1,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        LabError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<nbrw_core::Error> for LabError {
    fn from(e: nbrw_core::Error) -> Self {
        use nbrw_core::Error::*;
        match e {
            InvalidParameter(_) | OddDegreeSum { .. } | UnreachableRegime(_) => {
                LabError::Config(e.to_string())
            }
            _ => LabError::Precondition(e.to_string()),
        }
    }
}
