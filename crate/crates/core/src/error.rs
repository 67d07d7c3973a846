// SPDX-License-Identifier: Apache-2.0

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
    #[error("duplicate passage id {id:?} at line {line}")]
    DuplicateId { id: String, line: usize },
    #[error("index build: {0}")]
    Build(String),
    #[error("index format: {0}")]
    Format(String),
    #[error("unknown passage id {0:?}")]
    UnknownPassage(String),
    #[error("vocabulary mismatch: expected fingerprint {expected:016x}, found {found:016x}")]
    VocabularyMismatch { expected: u64, found: u64 },
    #[error("corpus does not match the index: {0}")]
    CorpusMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable code for this error class.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "IO",
            Error::Parse { .. } => "PARSE",
            Error::DuplicateId { .. } => "DUPLICATE_ID",
            Error::Build(_) => "INDEX_BUILD",
            Error::Format(_) => "INDEX_FORMAT",
            Error::UnknownPassage(_) => "UNKNOWN_PASSAGE",
            Error::VocabularyMismatch { .. } | Error::CorpusMismatch(_) => "VOCAB_MISMATCH",
            Error::InvalidArgument(_) => "INVALID_ARGUMENT",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
