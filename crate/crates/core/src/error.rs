use std::path::PathBuf;

use crate::modes::SaitpFailure;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("cannot normalize a zero field")]
    ZeroField,

    /// A propagation produced NaN or infinity.
    #[error("non-finite amplitude after step {step} (time step too large for the nonlinearity?)")]
    Unstable { step: usize },

    #[error("{0}")]
    NotConverged(Box<SaitpFailure>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("corrupt file {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },

    #[error("unsupported file version {0}")]
    Version(u16),

    #[error("missing input: {0}")]
    Missing(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
