use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] spectral_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type LabResult<T> = std::result::Result<T, LabError>;

/// Process exit status for invalid configuration or input.
pub const EXIT_INVALID: i32 = 2;
/// Process exit status for numeric failure (divergence, NaN, resource cap).
pub const EXIT_NUMERIC: i32 = 3;
/// Process exit status for I/O and other failures.
pub const EXIT_OTHER: i32 = 1;

impl LabError {
    pub fn exit_code(&self) -> i32 {
        use spectral_core::Error as E;
        match self {
            LabError::Config(_) | LabError::Json(_) => EXIT_INVALID,
            LabError::Core(E::InvalidInput(_) | E::Format(_)) => EXIT_INVALID,
            LabError::Core(E::Numeric(_) | E::Resource(_) | E::DegenerateDirection(_)) => EXIT_NUMERIC,
            LabError::Io { .. } => EXIT_OTHER,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn config_err<T>(msg: impl Into<String>) -> LabResult<T> {
    Err(LabError::Config(msg.into()))
}
