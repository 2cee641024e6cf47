use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("untokenizable text: {0:?}")]
    Untokenizable(String),
    #[error("class {class:?} has {available} examples, {required} required")]
    ClassTooSmall {
        class: String,
        available: usize,
        required: usize,
    },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("translation failed: {0}")]
    Translation(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("update {update} outside schedule of {total} updates")]
    UpdateOutOfRange { update: u64, total: u64 },
    #[error("config: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

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

pub type Result<T> = std::result::Result<T, Error>;
