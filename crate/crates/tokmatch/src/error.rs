//! Crate-wide error type with a stable mapping onto process exit codes.

use thiserror::Error;

/// Everything that can go wrong, grouped by how the CLI reports it:
/// configuration errors exit 1, data errors exit 2, numerical failures exit 3.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or flag combination.
    #[error("{0}")]
    Config(String),

    /// Unreadable or malformed input data (corpus, vocabulary, checkpoint, index).
    #[error("{0}")]
    Data(String),

    /// I/O failure while reading or writing an artifact.
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Shape or dimension mismatch between operands.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Numerical failure: NaN/Inf, degenerate inputs, gradient-check failure.
    #[error("{0}")]
    Numerical(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// Process exit code for this error: 1 usage/config, 2 data, 3 numerical.
    /// Dimension mismatches count as data errors: at the CLI boundary they
    /// mean inconsistent artifacts (checkpoint vs vocabulary vs index).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Data(_) | Error::Io { .. } | Error::Dimension(_) => 2,
            Error::Numerical(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
