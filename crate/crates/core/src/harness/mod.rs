//! Experiment orchestration: config files, dataset generation, training runs,
//! ablations, oracle evaluation, sweeps and result files.

mod config;
mod dataset;
mod emit;
mod experiment;

pub use config::{ExperimentConfig, KEYS};
pub use dataset::{load_dataset, make_dataset, samples, write_dataset_files, Dataset, SPLITS};
pub use emit::{emit_results, parse_json_lines, summary_csv, write_results, Format};
pub use experiment::{
    ablate, ablation_config, evaluate_checkpoints, load_model, oracle_eval, prepare, run_experiment, summarize,
    sweep, tau_sweep, Ablation, Prepared, RunManifest, RunOutput, SeedResult, Split, SummaryRow, SweepParam, SweepRow,
    CODE_VERSION,
};

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::language::LanguageError;
use crate::model::ModelError;
use crate::numeric::NumericError;
use crate::training::TrainingError;
use crate::world::WorldError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("config line {line}: {msg}")]
    ConfigLine { line: usize, msg: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {msg}")]
    Parse { path: PathBuf, msg: String },
    #[error("no checkpoint at {0}")]
    MissingCheckpoint(PathBuf),
    #[error("infeasible dataset: {0}")]
    Infeasible(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Training(#[from] TrainingError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Language(#[from] LanguageError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

impl HarnessError {
    /// Short stable label for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) | Self::ConfigLine { .. } => "config",
            Self::Io { .. } => "io",
            Self::Parse { .. } => "parse",
            Self::MissingCheckpoint(_) => "missing_checkpoint",
            Self::Infeasible(_) => "infeasible",
            Self::Invalid(_) => "invalid",
            Self::Training(_) => "training",
            Self::Model(_) => "model",
            Self::World(_) => "world",
            Self::Language(_) => "language",
            Self::Numeric(_) => "numeric",
        }
    }
}

pub(crate) fn read_file(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io { path: dir.to_path_buf(), source })?;
    }
    std::fs::write(path, contents).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })
}
