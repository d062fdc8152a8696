use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("value outside the allowed domain: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("capacity exceeded: {patterns} patterns for a network of {nodes} nodes")]
    Capacity { patterns: usize, nodes: usize },

    #[error("training failed: {0}")]
    Training(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("unsupported format: {0}")]
    Format(String),

    #[error("corrupted bank file: stored CRC {stored:#010x}, computed {computed:#010x}")]
    Corruption { stored: u32, computed: u32 },

    #[error(
        "no network passed the selection threshold (best score {best}, threshold {threshold})"
    )]
    Rejected { best: f64, threshold: f64 },

    #[error("config error on line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("config is missing required key `{0}`")]
    MissingKey(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
