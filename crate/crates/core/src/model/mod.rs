//! The agent network and its inference rule.
//!
//! A model is built from encoders (word embedding, bidirectional text LSTM
//! and a small CNN over observations) and decoders (soft attention over the
//! instruction, a trajectory LSTM over `[x_t, v_t, a_{t-1}]` and a learned
//! time embedding). The direction head and the stop head read `[h_t, t]`
//! from their decoder. [`Variant`] decides which pieces the two heads share.

mod config;
mod network;
mod policy;

pub use config::{ConvLayer, ModelConfig, Variant};
pub use network::{AgentState, Model, StepVars, START_ACTION};
pub use policy::{act, ActRule, PolicyOutput};

use thiserror::Error;

use crate::numeric::NumericError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("invalid model input: {0}")]
    Input(String),
    #[error("checkpoint is missing parameter `{0}`")]
    MissingParam(String),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}
