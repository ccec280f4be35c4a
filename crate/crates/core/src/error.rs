use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A thermodynamic or geometric quantity was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Caller supplied inconsistent or malformed input.
    #[error("invalid input: {0}")]
    Input(String),

    /// Explicit update produced a negative density or pressure.
    #[error("step failure at t={time}: cell {cell}: {reason}")]
    StepFailure {
        cell: usize,
        time: f64,
        reason: String,
    },

    /// Configuration validation failure, with the offending field path.
    #[error("config: {path}: {message}")]
    Config { path: String, message: String },

    /// An operation that needs a positive energy defect found none.
    #[error("no positive energy defect to absorb (d_E = {defect})")]
    NoDefect { defect: f64 },

    #[error("parse error in {file}: line {line}: {message}")]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Input(_) | Error::Config { .. } | Error::Parse { .. } | Error::Io { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
