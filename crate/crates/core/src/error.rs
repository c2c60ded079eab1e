use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("index {index} out of range for mode-{mode} of size {size}")]
    Bounds { mode: usize, index: usize, size: usize },

    #[error("invalid mode {0}; expected 1, 2 or 3")]
    InvalidMode(usize),

    #[error("non-finite value {value} at position {position}")]
    NonFinite { position: usize, value: f64 },

    #[error("invalid argument: {0}")]
    Validation(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("factor matrix for mode-{mode} is rank deficient")]
    RankDeficient { mode: usize },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("malformed tensor file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("truncated tensor payload in {path}: expected {expected} bytes, found {actual}")]
    Truncated {
        path: PathBuf,
        expected: usize,
        actual: usize,
    },

    #[error("triplet ({i},{j},{k}) in {path} is outside dims {dims:?}")]
    TripletOutOfRange {
        path: PathBuf,
        i: usize,
        j: usize,
        k: usize,
        dims: (usize, usize, usize),
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("rank {rank}: {source}")]
    AtRank {
        rank: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
