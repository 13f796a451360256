use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid model spec: {0}")]
    InvalidSpec(String),

    #[error("non-finite loss ({loss}) at optimizer step {step}")]
    NonFiniteLoss { loss: f64, step: u64 },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse { row: usize, column: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("series of length {len} is too short for window {window} and horizon {horizon}")]
    SeriesTooShort { len: usize, window: usize, horizon: usize },

    #[error("split sizes total {requested} but the dataset has {available} rows")]
    Oversubscribed { requested: usize, available: usize },

    #[error("noise rate {0} outside [0, 0.5]")]
    NoiseRate(f64),

    #[error("active set has {0} members; at least 2 are required")]
    ActiveSetTooSmall(usize),

    #[error("anchor {0} is not in the active set")]
    AnchorNotActive(usize),

    #[error("active set of the samples does not match the sampler")]
    ActiveSetMismatch,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("{0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("report error: {0}")]
    Report(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
