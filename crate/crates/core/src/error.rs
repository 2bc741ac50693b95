use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent or invalid configuration (grid/geometry mismatch, bad hyperparameters).
    #[error("configuration error: {0}")]
    Config(String),

    /// A caller supplied an argument outside the operation's domain.
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("refusing to assemble a dense {rows}x{cols} matrix (limit {limit} entries)")]
    SizeGuard { rows: usize, cols: usize, limit: usize },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
