use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("parameter error: {0}")]
    Param(String),

    #[error("unsupported structure: {0}")]
    Unsupported(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("ball B({center:?}, {radius}) leaves the quadrature domain")]
    DomainOverflow { center: Vec<f64>, radius: f64 },

    #[error("accuracy error: estimated error {estimate:e} exceeds target {target:e} ({context})")]
    Accuracy {
        estimate: f64,
        target: f64,
        context: String,
    },

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("divergence: remainder norm {norm} is not below 1; increase M0")]
    Divergence { norm: f64 },

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("stale cache entry {path}: expected hash {expected}, found {found}")]
    StaleCache {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("corrupted cache entry {path}: {reason}")]
    CorruptCache { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
