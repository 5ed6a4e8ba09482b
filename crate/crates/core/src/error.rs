//! Crate-wide error type.

use thiserror::Error;

/// Errors produced anywhere in the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A single input row could not be parsed; carries the 1-based line number.
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },

    /// The dataset as a whole violates an input contract.
    #[error("{0}")]
    Dataset(String),

    /// A synthetic-data profile is invalid.
    #[error("profile: {0}")]
    Profile(String),

    /// A regression fit could not be carried out.
    #[error("fit: {0}")]
    Fit(String),

    /// A smoothing run could not be carried out.
    #[error("smooth: {0}")]
    Smooth(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn row(line: u64, message: impl Into<String>) -> Self {
        Error::Row {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn dataset(message: impl Into<String>) -> Self {
        Error::Dataset(message.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
