use std::path::PathBuf;

use thiserror::Error;

use crate::treebank::{ParseError, TreeError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{location}: {message}")]
    Format { location: String, message: String },
    #[error("{document}: {source}")]
    Parse {
        document: String,
        #[source]
        source: ParseError,
    },
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("instance {id}: {message}")]
    Validation { id: String, message: String },
    #[error("records do not match the dataset: missing [{}], extra [{}]", missing.join(", "), extra.join(", "))]
    Reconciliation { missing: Vec<String>, extra: Vec<String> },
    #[error("instance {id}: {message}")]
    Decode { id: String, message: String },
    #[error("synthesis failed: {0}")]
    Synthesis(String),
    #[error("prediction for unknown anaphor id {0}")]
    UnknownId(String),
    #[error("anaphor ids differ: only in first [{}], only in second [{}]", only_first.join(", "), only_second.join(", "))]
    IdSetMismatch { only_first: Vec<String>, only_second: Vec<String> },
    #[error("cannot sample {requested} of {available} instances")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn format(location: impl Into<String>, message: impl std::fmt::Display) -> Self {
        Error::Format {
            location: location.into(),
            message: message.to_string(),
        }
    }

    /// Stable machine-readable error class.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
                "file_not_found"
            }
            Error::Io { .. } => "io",
            Error::Format { .. } => "format",
            Error::Parse { .. } => "parse",
            Error::Tree(_) => "tree",
            Error::Validation { .. } => "validation",
            Error::Reconciliation { .. } => "reconciliation",
            Error::Decode { .. } => "decode",
            Error::Synthesis(_) => "synthesis",
            Error::UnknownId(_) => "unknown_id",
            Error::IdSetMismatch { .. } => "id_set_mismatch",
            Error::SampleTooLarge { .. } => "sample_too_large",
            Error::Config(_) => "config",
        }
    }
}
