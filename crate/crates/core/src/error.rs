use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent dimensions or invalid settings.
    #[error("configuration error: {0}")]
    Config(String),

    /// An operation was called in the wrong order (e.g. backward before forward).
    #[error("state error: {0}")]
    State(String),

    /// Input too small or constant for the requested statistic.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Malformed binary container (checkpoint or IDX).
    #[error("format error at byte {offset}: {msg}")]
    Format { offset: u64, msg: String },

    /// A loss became NaN or infinite during training.
    #[error("non-finite {term} loss at iteration {iteration}")]
    NonFinite { term: &'static str, iteration: usize },

    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn format(offset: u64, msg: impl Into<String>) -> Self {
        Error::Format {
            offset,
            msg: msg.into(),
        }
    }
}
