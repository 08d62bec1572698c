use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Well-formed request the library declines to compute (bad prime, size cap, ambiguity).
    #[error("refused: {0}")]
    Refused(String),
    /// A coefficient was requested beyond the known precision of a series.
    #[error("precision: {0}")]
    Precision(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    /// A model could not be calibrated to the target traces.
    #[error("falsified: {0}")]
    Falsified(String),
    #[error("validation: {0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Refused(_) => "refused",
            Error::Precision(_) => "precision",
            Error::Parse { .. } => "parse",
            Error::Falsified(_) => "falsified",
            Error::Validation(_) => "validation",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }

    pub fn is_refusal(&self) -> bool {
        matches!(self, Error::Refused(_) | Error::Precision(_))
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(err: &serde_json::Error) -> Self {
        Error::Parse {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}

macro_rules! domain {
    ($($arg:tt)*) => { $crate::error::Error::Domain(format!($($arg)*)) };
}
macro_rules! refused {
    ($($arg:tt)*) => { $crate::error::Error::Refused(format!($($arg)*)) };
}
macro_rules! invalid {
    ($($arg:tt)*) => { $crate::error::Error::Validation(format!($($arg)*)) };
}
macro_rules! falsified {
    ($($arg:tt)*) => { $crate::error::Error::Falsified(format!($($arg)*)) };
}
pub(crate) use {domain, falsified, invalid, refused};
