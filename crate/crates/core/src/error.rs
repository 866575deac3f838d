use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = NaumError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum NaumError {
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("non-finite input: {0}")]
    NonFiniteInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("scheme {scheme} is not supported by the {oracle} regularizer")]
    UnsupportedScheme { scheme: String, oracle: String },

    #[error("initial point is infeasible: {0}")]
    InfeasibleInitialization(String),

    #[error("cached Gram blocks drifted by {relative:e} (relative) from a dense recomputation")]
    CacheDrift { relative: f64 },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },

    #[error("invalid trial configuration: {0}")]
    InvalidConfig(String),

    #[error("trial {algorithm} (seed {seed}) failed: {source}")]
    Trial {
        algorithm: String,
        seed: u64,
        #[source]
        source: Box<NaumError>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl NaumError {
    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        NaumError::InvalidDimensions(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        NaumError::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        NaumError::Io {
            path: path.into(),
            source,
        }
    }
}
