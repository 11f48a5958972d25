use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Header or structural problem in a persisted file.
    #[error("{}: format error at byte {offset}: {message}", path.display())]
    Format {
        path: PathBuf,
        offset: u64,
        message: String,
    },

    #[error("{}: payload length mismatch at byte {offset}: expected {expected} bytes, found {found}", path.display())]
    Length {
        path: PathBuf,
        offset: u64,
        expected: u64,
        found: u64,
    },

    #[error("{}: non-finite value at byte {offset}", path.display())]
    NonFinite { path: PathBuf, offset: u64 },

    #[error("{}: csv error: {message}", path.display())]
    Csv { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that originate in the filesystem or a persisted file.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Format { .. }
                | Error::Length { .. }
                | Error::NonFinite { .. }
                | Error::Csv { .. }
        )
    }
}
