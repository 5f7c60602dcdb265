//! Crate-wide error type.
//!
//! Stages either skip-and-count recoverable junk (malformed records,
//! unknown emoji) or fail fast with one of these variants. Anything that
//! would silently corrupt an artifact (bad checksum, unknown file version,
//! misaligned gold/prediction data) is fatal.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unsupported file header {found:?} (expected {expected:?})")]
    Version { found: String, expected: String },

    #[error("checksum mismatch in shard {shard}")]
    ChecksumMismatch { shard: String },

    #[error("corrupt shard {shard}: {msg}")]
    Shard { shard: String, msg: String },

    #[error("sentence {index}: gold has {gold} tokens but prediction has {pred}")]
    Misaligned { index: usize, gold: usize, pred: usize },

    #[error("label {label:?} is not in the {scheme} label set")]
    UnknownLabel { label: String, scheme: String },

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// Attaches a concrete path to errors raised through anonymous
    /// readers and writers.
    pub fn with_path(self, path: impl Into<PathBuf>) -> Self {
        match self {
            Error::Io { source, .. } => Error::Io { path: path.into(), source },
            Error::Parse { line, msg } => Error::Parse {
                line,
                msg: format!("{}: {msg}", path.into().display()),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
