use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by selection, file IO and metrics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid rank {rank}: must lie in 1..={max}")]
    InvalidRank { rank: usize, max: usize },

    #[error("rank deficient: numerical rank {rank} < requested {requested}")]
    RankDeficient { rank: usize, requested: usize },

    #[error("invalid pivot {index}: {reason}")]
    InvalidPivot { index: usize, reason: &'static str },

    #[error("invalid count: {0}")]
    InvalidCount(String),

    #[error("invalid chunking: {0}")]
    InvalidChunking(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse classification used for process exit codes and C status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Format,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidConfig(_) | Error::InvalidCount(_) | Error::InvalidChunking(_) => {
                ErrorKind::Usage
            }
            Error::Format(_) | Error::Io { .. } => ErrorKind::Format,
            Error::InvalidInput(_)
            | Error::InvalidRank { .. }
            | Error::RankDeficient { .. }
            | Error::InvalidPivot { .. }
            | Error::Numerical(_) => ErrorKind::Numerical,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
