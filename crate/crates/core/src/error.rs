use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}: record {record}: {message}")]
    Parse {
        file: String,
        record: String,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("dangling reference: {0}")]
    DanglingReference(String),

    #[error("unknown {kind} `{id}`")]
    Unknown { kind: &'static str, id: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("insufficient pairs: {0} nonzero differences, need at least 5")]
    InsufficientPairs(usize),

    #[error("score parse error: {0:?}")]
    ScoreParse(String),

    #[error("score {0} outside [0, 100]")]
    ScoreRange(f64),

    #[error("transport error: {0}")]
    Transport(String),

    #[error("{0}")]
    Config(String),

    #[error("insufficient source records: need {needed}, have {available}")]
    InsufficientSource { needed: usize, available: usize },

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

    pub(crate) fn parse(
        file: impl Into<String>,
        record: impl ToString,
        message: impl ToString,
    ) -> Self {
        Error::Parse {
            file: file.into(),
            record: record.to_string(),
            message: message.to_string(),
        }
    }
}
