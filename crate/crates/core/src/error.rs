use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors produced anywhere in the library.
///
/// Variants fall into three families that the CLI maps onto exit codes:
/// parameter problems, data problems, and numerical failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("{context}: {message}")]
    Format { context: String, message: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("domain error: {0}")]
    Domain(String),

    /// The affinity graph has more than one connected component, so the
    /// generalized eigenproblem has a degenerate null space.
    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },

    #[error("numerical failure: {message} (iterations={iterations}, residual={residual:e})")]
    Numerical {
        message: String,
        iterations: usize,
        residual: f64,
    },

    #[error("statistic `{0}` is undefined for this graph")]
    UndefinedStatistic(&'static str),
}

/// Coarse classification of an [`Error`], used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Parameter,
    Data,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Parameter(_) | Error::Domain(_) => ErrorKind::Parameter,
            Error::Format { .. } | Error::Validation(_) | Error::Io { .. } => ErrorKind::Data,
            Error::Disconnected { .. } | Error::Numerical { .. } | Error::UndefinedStatistic(_) => {
                ErrorKind::Numerical
            }
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn format(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format {
            context: context.into(),
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
