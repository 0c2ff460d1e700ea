use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("line {line}: timestamp {found} is earlier than previous timestamp {previous}")]
    Order {
        line: usize,
        previous: u64,
        found: u64,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("window of {window} references exceeds sequence length {len}")]
    InsufficientData { window: usize, len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("instance too large for exhaustive search: {0}")]
    InstanceTooLarge(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn parse(line: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            line,
            reason: reason.into(),
        }
    }
}
