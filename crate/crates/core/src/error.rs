use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown move token {token:?} at position {position}")]
    ParseMove { token: String, position: usize },

    #[error("invalid facelet string: {0}")]
    Facelets(String),

    #[error("invalid state key: {0}")]
    StateKey(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Dataset {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: no nodes")]
    NoNodes { path: PathBuf },

    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: String,
        expected: String,
        actual: String,
    },

    #[error("label {label} at node {node} is outside the class range 0..{num_classes}")]
    LabelOutOfRange {
        node: usize,
        label: usize,
        num_classes: usize,
    },

    #[error("non-finite loss {loss} at epoch {epoch}")]
    NonFiniteLoss { epoch: usize, loss: f64 },

    #[error("checkpoint {path} ({version}): {message}")]
    Checkpoint {
        path: PathBuf,
        version: String,
        message: String,
    },

    #[error("oracle depth cap {requested} exceeds the supported maximum {max}")]
    DepthLimit { requested: u8, max: u8 },

    #[error("state or one of its neighbours lies beyond the oracle depth cap {cap}")]
    InsufficientDepth { cap: u8 },

    #[error(
        "instance {index}: reported solution does not return {scramble:?} to the solved state"
    )]
    InvalidSolution { index: usize, scramble: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
