use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to parse {path}: {message}")]
    Parse { path: String, message: String },

    #[error("invalid value for `{field}`: {message}")]
    Invalid { field: String, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("infeasible action: {0}")]
    Infeasible(String),

    #[error("enumeration of {count} actions exceeds the budget of {limit}")]
    Budget { count: u128, limit: u128 },

    #[error("non-finite value during training: {0}")]
    NonFinite(String),

    #[error("no fixture caption for image hash {0}")]
    UnknownFixture(String),

    #[error("remote extraction failed after {retries} retries ({kind}): {message}")]
    Remote {
        kind: RemoteErrorKind,
        message: String,
        retries: u32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RemoteErrorKind {
    Timeout,
    Auth,
    Http,
    Transport,
    Protocol,
}

impl std::fmt::Display for RemoteErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RemoteErrorKind::Timeout => "timeout",
            RemoteErrorKind::Auth => "auth",
            RemoteErrorKind::Http => "http",
            RemoteErrorKind::Transport => "transport",
            RemoteErrorKind::Protocol => "protocol",
        };
        f.write_str(s)
    }
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
