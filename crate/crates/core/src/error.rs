use std::path::PathBuf;

use thiserror::Error;

use crate::table::{ColumnRef, TableId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("corpus {0} contains no parseable table")]
    EmptyCorpus(PathBuf),

    #[error("unknown table {0}")]
    UnknownTable(TableId),

    #[error("unknown column {0}")]
    UnknownColumn(ColumnRef),

    #[error("join key type mismatch: {left} is {left_type}, {right} is {right_type}")]
    TypeMismatch {
        left: ColumnRef,
        left_type: &'static str,
        right: ColumnRef,
        right_type: &'static str,
    },

    #[error("spill failed: {0}")]
    Spill(String),

    #[error("invalid query view: {0}")]
    QueryView(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("index format error: {0}")]
    Format(String),

    #[error("session error: {0}")]
    Session(#[from] crate::present::SessionError),

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
