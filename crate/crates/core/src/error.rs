use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulator, perception and control layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cloth generation failed: {0}")]
    GenerationFailure(String),

    #[error("failed to write dataset to {path}: {source}")]
    DatasetWrite {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("no edge detected: {0}")]
    NoEdgeDetected(String),

    #[error("invalid gripper state: {0}")]
    InvalidState(String),

    #[error("invalid phase transition: {0}")]
    InvalidTransition(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid_arg(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
