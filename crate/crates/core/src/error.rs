use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::corpus::ParallelGap;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input text. `line` is 1-based; 0 means "whole input".
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("line {line}: duplicate tag label {label:?}")]
    DuplicateLabel { label: String, line: usize },

    #[error("{0}")]
    ParallelGap(Box<ParallelGap>),

    #[error("cannot serialize verse {verse}, token {position}: {message}")]
    Serialize {
        verse: String,
        position: usize,
        message: String,
    },

    /// Two structures that must agree verse-for-verse do not.
    #[error("verse {verse}: {message}")]
    Integrity { verse: String, message: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub(crate) fn format(line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn integrity(verse: impl ToString, message: impl Into<String>) -> Self {
        Error::Integrity {
            verse: verse.to_string(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
