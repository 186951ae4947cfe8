//! Dense arrays, reverse-mode differentiation and the adaptive-moment optimizer.

mod array;
mod checkpoint;
pub mod gradcheck;
mod params;
mod tape;

pub use array::{softmax, Array};
pub use checkpoint::CHECKPOINT_FORMAT_VERSION;
pub use params::{AdamConfig, Gradients, ParamId, ParamStore};
pub use tape::{forward_backward, Tape, Var};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericError {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },
    #[error("loss must be a scalar, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("duplicate parameter name `{0}`")]
    DuplicateParam(String),
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
    #[error("invalid optimizer setting: {0}")]
    InvalidHyper(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
