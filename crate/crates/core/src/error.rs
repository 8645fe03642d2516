use std::io;
use std::path::Path;

use thiserror::Error;

use crate::schema::SchemaError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: {source}")]
    Schema { path: String, source: SchemaError },
    #[error("manifest line {line}: {reason}")]
    Manifest { line: usize, reason: String },
    #[error("invalid ground truth for page {page_id}: {reason}")]
    InvalidGroundTruth { page_id: String, reason: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid report: {0}")]
    Report(String),
}

impl Error {
    pub fn io(path: &Path, source: io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// True for I/O failures, false for bad input data or configuration.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
