use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("labels contain a single class; both classes are required")]
    SingleClass,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("need at least {required} records, got {got}")]
    TooFewRecords { required: usize, got: usize },

    #[error("missing {artifact}; run `{subcommand}` first")]
    MissingPrerequisite {
        artifact: String,
        subcommand: &'static str,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Short machine-readable tag, used in the CLI's error JSON and the FFI status codes.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
            Error::InvalidInput(_) => "invalid_input",
            Error::SingleClass => "single_class",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::TooFewRecords { .. } => "too_few_records",
            Error::MissingPrerequisite { .. } => "missing_prerequisite",
        }
    }
}
