//! Error type shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

/// Unified error for snapshot I/O, ingestion, and analysis.
#[derive(Debug, Error)]
pub enum Error {
    /// A snapshot file is missing or malformed.
    #[error("format error: {0}")]
    Format(String),

    /// Snapshot contents disagree with their manifest.
    #[error("integrity error: {0}")]
    Integrity(String),

    /// An input violates a documented precondition.
    #[error("validation error: {0}")]
    Validation(String),

    /// The remote resource does not exist.
    #[error("not found: {0}")]
    NotFound(String),

    /// The transport gave up or returned an unusable response.
    #[error("transport error: {0}")]
    Transport(String),

    /// A text input failed to parse.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// The correlation is undefined for the given inputs.
    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// Wraps an `std::io::Error` with the path it happened on.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps a `serde_json::Error` with a human-readable context.
    pub fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
