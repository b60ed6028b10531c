use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("corpus contains no tokens")]
    EmptyCorpus,

    #[error("document {id} has time_index {time_index}, corpus has {n_slices} slices")]
    TimeIndexOutOfRange {
        id: String,
        time_index: usize,
        n_slices: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is all zero")]
    ZeroMatrix,

    #[error("category {0:?} has no documents")]
    EmptyCategory(String),

    #[error("unknown category {0:?}")]
    UnknownCategory(String),

    #[error("model has a single category; no complement to contrast against")]
    NoComplement,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed input at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
