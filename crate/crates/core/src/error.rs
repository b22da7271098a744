use std::io;

use thiserror::Error;

/// Errors produced anywhere in the inference pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid blockmodel operation: {0}")]
    Blockmodel(String),

    #[error("malformed wire payload: {0}")]
    Decode(String),

    #[error(transparent)]
    Comm(#[from] CommError),

    #[error("replica divergence on rank {rank}: {detail}")]
    ReplicaDivergence { rank: usize, detail: String },
}

/// Failures of the collective-exchange layer.
#[derive(Debug, Error)]
pub enum CommError {
    #[error("collective timed out after {0:?} waiting for peers")]
    Timeout(std::time::Duration),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("a peer rank failed: {0}")]
    PeerFailed(String),

    #[error("transport error: {0}")]
    Transport(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
