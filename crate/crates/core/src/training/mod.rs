//! Teacher-forced training, weighted losses and policy rollouts.

mod loss;
mod rollout;
mod trace;
mod trainer;

pub use loss::{cross_entropy, direction_loss, stop_loss, total_loss, LossConfig, LossValue, LOG_EPS};
pub use rollout::{evaluate_policy, rollout, OracleMode, Rollout};
pub use trace::{SupervisionTrace, TraceStep};
pub use trainer::{
    episode_loss, fit, format_log_line, train_epoch, EpisodeLoss, EpochStats, FitOutcome, TrainConfig,
};

use std::sync::Arc;

use thiserror::Error;

use crate::language::Instruction;
use crate::model::ModelError;
use crate::numeric::NumericError;
use crate::world::{CityGraph, HopTable, NodeId, Observation, ObservationCache, ObservationConfig, WorldError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainingError {
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("invalid episode data: {0}")]
    Data(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite loss at epoch {epoch}, episode {episode}")]
    Diverged { epoch: usize, episode: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error(transparent)]
    World(#[from] WorldError),
}

/// A reference route paired with its instruction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sample {
    pub route: Vec<NodeId>,
    pub instruction: Instruction,
}

/// The city an agent is trained and evaluated in, with its cached renderings.
#[derive(Debug)]
pub struct NavContext {
    pub graph: CityGraph,
    pub hops: HopTable,
    pub obs: ObservationConfig,
    pub t_max: usize,
    cache: ObservationCache,
}

impl NavContext {
    pub fn new(graph: CityGraph, obs: ObservationConfig, t_max: usize) -> Self {
        let hops = HopTable::new(&graph);
        Self { graph, hops, obs, t_max, cache: ObservationCache::new() }
    }

    pub fn observe(&self, node: NodeId, heading: f64) -> Arc<Observation> {
        self.cache.get(&self.graph, node, heading, &self.obs)
    }
}
