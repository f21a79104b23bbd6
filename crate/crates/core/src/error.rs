use std::path::PathBuf;

/// Crate-wide error type. Every fallible operation reports enough context to
/// identify the offending entity (field name, instance id, file path).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid camera: {0}")]
    InvalidCamera(String),

    #[error("point or mesh behind camera: {0}")]
    BehindCamera(String),

    #[error("dimension mismatch for {what}: expected {expected_w}x{expected_h}, got {actual_w}x{actual_h}")]
    DimensionMismatch {
        what: String,
        expected_w: u32,
        expected_h: u32,
        actual_w: u32,
        actual_h: u32,
    },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("missing precomputed data: {0}")]
    MissingData(String),

    #[error("inside/outside sign undecidable: {0}; mesh may not be watertight")]
    SignUndecidable(String),

    #[error("objective produced a non-finite value while perturbing coordinate {coordinate}")]
    NonFiniteObjective { coordinate: usize },

    #[error("no detection matched the target instance: {0}")]
    NoMatch(String),

    #[error("mask provider failed: {0}")]
    Provider(String),

    #[error("parse error in {path} (line {line}): {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error on {path}: {message}")]
    Image { path: PathBuf, message: String },

    #[error("json error in {path}: {message}")]
    Json { path: PathBuf, message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
