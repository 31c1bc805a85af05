use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::annotate::ValidationError;
use crate::transport::ApiError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The server could not be reached or answered with something unusable.
    #[error(transparent)]
    Api(#[from] ApiError),

    /// A caller-side precondition was violated (empty prompt, bad URL, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    /// A transcript, corpus or matrix file did not have the expected shape.
    #[error("malformed {what}: {detail}")]
    Malformed { what: &'static str, detail: String },

    #[error(transparent)]
    Validation(#[from] ValidationError),

    #[error("embedding for {id:?} has {actual} dimensions, expected {expected}")]
    DimensionMismatch { id: String, expected: usize, actual: usize },

    #[error("fetching {url}: {detail}")]
    Fetch { url: String, detail: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Malformed {
            what,
            detail: detail.into(),
        }
    }

    /// The underlying API error, if this failure came from the wire.
    pub fn as_api(&self) -> Option<&ApiError> {
        match self {
            Error::Api(e) => Some(e),
            _ => None,
        }
    }
}
