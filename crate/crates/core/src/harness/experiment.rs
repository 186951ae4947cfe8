use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{make_dataset, samples, write_dataset_files, Dataset};
use super::emit::{summary_csv, write_results, Format};
use super::{read_file, write_file, ExperimentConfig, HarnessError};
use crate::language::Vocabulary;
use crate::metrics::{EpisodeMetrics, MetricsReport};
use crate::model::{ActRule, Model, ModelConfig, Variant};
use crate::numeric::ParamStore;
use crate::training::{evaluate_policy, fit, NavContext, OracleMode, Sample};

pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

const CHECKPOINT_FILE: &str = "checkpoint.json";
const MODEL_FILE: &str = "model.json";

/// Dataset, tokenized samples and the shared navigation context.
pub struct Prepared {
    pub data: Dataset,
    pub ctx: NavContext,
    pub train: Vec<Sample>,
    pub dev: Vec<Sample>,
    pub test: Vec<Sample>,
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared, HarnessError> {
    let data = make_dataset(cfg)?;
    let vocab = Vocabulary::standard();
    if vocab.len() != cfg.model.vocab_size {
        return Err(HarnessError::Config(format!(
            "model vocabulary is {}, the instruction vocabulary has {} tokens",
            cfg.model.vocab_size,
            vocab.len()
        )));
    }
    let train = samples(&data.train, &vocab)?;
    let dev = samples(&data.dev, &vocab)?;
    let test = samples(&data.test, &vocab)?;
    let ctx = NavContext::new(data.graph.clone(), cfg.obs.clone(), cfg.t_max);
    Ok(Prepared { data, ctx, train, dev, test })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Dev,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }

    fn samples(self, prep: &Prepared) -> &[Sample] {
        match self {
            Split::Dev => &prep.dev,
            Split::Test => &prep.test,
        }
    }
}

impl FromStr for Split {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            _ => Err(HarnessError::Invalid(format!("unknown split `{s}` (dev or test)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    /// Set when training hit a non-finite loss; the best parameters so far are kept.
    pub diverged: Option<String>,
    pub dev: EpisodeMetrics,
    pub test: EpisodeMetrics,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub code_version: String,
    /// Full config text; parsing it reproduces the run.
    pub config: String,
    pub city_seed: u64,
    pub data_seed: u64,
    pub seeds: Vec<u64>,
    pub results: Vec<SeedResult>,
    pub wall_seconds: f64,
}

pub struct RunOutput {
    pub manifest: RunManifest,
    /// Per seed, in `manifest.seeds` order.
    pub dev: Vec<MetricsReport>,
    pub test: Vec<MetricsReport>,
    pub models: Vec<Model>,
}

impl RunOutput {
    pub fn summary(&self, label: &str, split: Split) -> SummaryRow {
        let reports = match split {
            Split::Dev => &self.dev,
            Split::Test => &self.test,
        };
        summarize(label, reports.iter().map(|r| &r.mean))
    }
}

/// Mean, min and max over seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub label: String,
    pub seeds: usize,
    pub mean: EpisodeMetrics,
    pub min: EpisodeMetrics,
    pub max: EpisodeMetrics,
}

pub fn summarize<'a>(label: &str, metrics: impl IntoIterator<Item = &'a EpisodeMetrics>) -> SummaryRow {
    let rows: Vec<[f64; 5]> = metrics.into_iter().map(EpisodeMetrics::values).collect();
    let fold = |f: &dyn Fn(&[f64]) -> f64| {
        let col = |k: usize| f(&rows.iter().map(|r| r[k]).collect::<Vec<_>>());
        EpisodeMetrics { tc: col(0), spd: col(1), sed: col(2), cls: col(3), sdtw: col(4) }
    };
    SummaryRow {
        label: label.to_string(),
        seeds: rows.len(),
        mean: fold(&|c| c.iter().sum::<f64>() / c.len().max(1) as f64),
        min: fold(&|c| c.iter().copied().fold(f64::INFINITY, f64::min)),
        max: fold(&|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
    }
}

fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed-{seed}"))
}

fn check_seeds(seeds: &[u64]) -> Result<(), HarnessError> {
    if seeds.is_empty() {
        return Err(HarnessError::Invalid("no seeds given".into()));
    }
    let mut seen = HashSet::new();
    if let Some(s) = seeds.iter().find(|s| !seen.insert(**s)) {
        return Err(HarnessError::Invalid(format!("seed {s} given twice")));
    }
    Ok(())
}

fn act_rule(cfg: &ExperimentConfig, model: &ModelConfig) -> ActRule {
    ActRule { tau: cfg.tau, key_point_gating: model.key_point_gating, one_branch: model.variant.is_one_branch() }
}

struct SeedRun {
    result: SeedResult,
    dev: MetricsReport,
    test: MetricsReport,
    model: Model,
}

fn train_seed(cfg: &ExperimentConfig, prep: &Prepared, seed: u64, dir: Option<&Path>) -> Result<SeedRun, HarnessError> {
    let started = Instant::now();
    let mut model = Model::new(cfg.model.clone(), seed)?;
    let mut log = String::new();
    let outcome = fit(&mut model, &prep.ctx, &prep.train, &prep.dev, &cfg.train_config(), seed, |line| {
        log::info!("{} seed {seed}: {line}", cfg.model.variant);
        log.push_str(line);
        log.push('\n');
    })?;
    *model.params_mut() = outcome.best;
    let rule = act_rule(cfg, model.config());
    let (test, _) = evaluate_policy(&model, &prep.ctx, &prep.test, &rule, OracleMode::None, &cfg.metrics)?;
    let dev = outcome.best_dev;
    let result = SeedResult {
        seed,
        best_epoch: outcome.best_epoch,
        epochs_run: outcome.log.len(),
        diverged: outcome.diverged.map(|e| e.to_string()),
        dev: dev.mean.clone(),
        test: test.mean.clone(),
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    if let Some(dir) = dir {
        write_file(&dir.join(CHECKPOINT_FILE), &model.params().to_checkpoint())?;
        let model_json = serde_json::to_string_pretty(model.config()).expect("model config serializes");
        write_file(&dir.join(MODEL_FILE), &model_json)?;
        write_file(&dir.join("config.txt"), &cfg.to_text())?;
        write_file(&dir.join("train.log"), &log)?;
        write_results(&dir.join("dev.csv"), &dev, Format::Csv)?;
        write_results(&dir.join("test.csv"), &test, Format::Csv)?;
    }
    Ok(SeedRun { result, dev, test, model })
}

/// Trains every `(config, seed)` job in parallel, each into its own directory.
fn run_jobs(jobs: &[(&ExperimentConfig, u64, Option<PathBuf>)], prep: &Prepared) -> Result<Vec<SeedRun>, HarnessError> {
    jobs.par_iter().map(|(cfg, seed, dir)| train_seed(cfg, prep, *seed, dir.as_deref())).collect()
}

fn assemble(cfg: &ExperimentConfig, runs: Vec<SeedRun>, wall: f64, out: Option<&Path>) -> Result<RunOutput, HarnessError> {
    let manifest = RunManifest {
        code_version: CODE_VERSION.to_string(),
        config: cfg.to_text(),
        city_seed: cfg.city_seed,
        data_seed: cfg.data_seed,
        seeds: runs.iter().map(|r| r.result.seed).collect(),
        results: runs.iter().map(|r| r.result.clone()).collect(),
        wall_seconds: wall,
    };
    if let Some(out) = out {
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        write_file(&out.join("manifest.json"), &text)?;
    }
    let mut output = RunOutput { manifest, dev: Vec::new(), test: Vec::new(), models: Vec::new() };
    for r in runs {
        output.dev.push(r.dev);
        output.test.push(r.test);
        output.models.push(r.model);
    }
    Ok(output)
}

fn run_prepared(cfg: &ExperimentConfig, prep: &Prepared, seeds: &[u64], out: Option<&Path>) -> Result<RunOutput, HarnessError> {
    check_seeds(seeds)?;
    let started = Instant::now();
    let jobs: Vec<_> = seeds.iter().map(|&s| (cfg, s, out.map(|o| seed_dir(o, s)))).collect();
    let runs = run_jobs(&jobs, prep)?;
    assemble(cfg, runs, started.elapsed().as_secs_f64(), out)
}

/// Trains one model per seed with early stopping on dev TC, then evaluates
/// dev and test. With `out`, writes the dataset under `data/`, a directory
/// per seed (checkpoint, model config, log, reports) and `manifest.json`.
pub fn run_experiment(cfg: &ExperimentConfig, seeds: &[u64], out: Option<&Path>) -> Result<RunOutput, HarnessError> {
    check_seeds(seeds)?;
    let prep = prepare(cfg)?;
    if let Some(out) = out {
        write_dataset_files(&prep.data, &out.join("data"))?;
    }
    run_prepared(cfg, &prep, seeds, out)
}

/// Loads the model saved in a seed directory.
pub fn load_model(dir: &Path) -> Result<Model, HarnessError> {
    let ckpt = dir.join(CHECKPOINT_FILE);
    if !ckpt.is_file() {
        return Err(HarnessError::MissingCheckpoint(ckpt));
    }
    let mpath = dir.join(MODEL_FILE);
    let config: ModelConfig = serde_json::from_str(&read_file(&mpath)?)
        .map_err(|e| HarnessError::Parse { path: mpath.clone(), msg: e.to_string() })?;
    let params = ParamStore::from_checkpoint(&read_file(&ckpt)?)
        .map_err(|e| HarnessError::Parse { path: ckpt.clone(), msg: e.to_string() })?;
    Ok(Model::from_parts(config, params)?)
}

/// Evaluates the checkpoint in `dir` on one split under `mode`.
pub fn oracle_eval(
    cfg: &ExperimentConfig,
    prep: &Prepared,
    dir: &Path,
    mode: OracleMode,
    split: Split,
) -> Result<MetricsReport, HarnessError> {
    let model = load_model(dir)?;
    let rule = act_rule(cfg, model.config());
    Ok(evaluate_policy(&model, &prep.ctx, split.samples(prep), &rule, mode, &cfg.metrics)?.0)
}

/// Evaluates `out/seed-<s>` for every seed on dev and test. Writes
/// `<mode>-<split>.csv` next to each checkpoint and `eval-<mode>.csv` in `out`.
pub fn evaluate_checkpoints(
    cfg: &ExperimentConfig,
    seeds: &[u64],
    out: &Path,
    mode: OracleMode,
) -> Result<Vec<SummaryRow>, HarnessError> {
    check_seeds(seeds)?;
    let prep = prepare(cfg)?;
    let mut rows = Vec::new();
    for split in [Split::Dev, Split::Test] {
        let mut means = Vec::new();
        for &s in seeds {
            let dir = seed_dir(out, s);
            let report = oracle_eval(cfg, &prep, &dir, mode, split)?;
            write_results(&dir.join(format!("{}-{}.csv", mode.as_str().to_lowercase(), split.as_str())), &report, Format::Csv)?;
            means.push(report.mean);
        }
        rows.push(summarize(split.as_str(), &means));
    }
    write_file(&out.join(format!("eval-{}.csv", mode.as_str().to_lowercase())), &summary_csv("split", &rows))?;
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ablation {
    Full,
    OneBranch,
    NoKeyPoints,
    NoWeighting,
}

impl Ablation {
    pub const ALL: [Ablation; 4] = [Ablation::Full, Ablation::OneBranch, Ablation::NoKeyPoints, Ablation::NoWeighting];

    pub fn as_str(self) -> &'static str {
        match self {
            Ablation::Full => "FULL",
            Ablation::OneBranch => "ONE_BRANCH",
            Ablation::NoKeyPoints => "NO_KEY_POINTS",
            Ablation::NoWeighting => "NO_WEIGHTING",
        }
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Ablation {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| HarnessError::Invalid(format!("unknown ablation `{s}`")))
    }
}

/// `cfg` with one component removed. FULL is `cfg` itself.
pub fn ablation_config(cfg: &ExperimentConfig, a: Ablation) -> ExperimentConfig {
    let mut c = cfg.clone();
    match a {
        Ablation::Full => {}
        Ablation::OneBranch => c.model.variant = Variant::OneBranch,
        Ablation::NoKeyPoints => c.model.key_point_gating = false,
        Ablation::NoWeighting => c.loss.lambda = 1.0,
    }
    c
}

/// Trains every variant on the same data and seeds. Returns one dev row per
/// variant (request order) and the runs. Writes `out/<VARIANT>/...` and
/// `out/ablation.csv`.
pub fn ablate(
    cfg: &ExperimentConfig,
    variants: &[Ablation],
    seeds: &[u64],
    out: Option<&Path>,
) -> Result<(Vec<SummaryRow>, Vec<RunOutput>), HarnessError> {
    check_seeds(seeds)?;
    if variants.is_empty() {
        return Err(HarnessError::Invalid("no ablation variants given".into()));
    }
    let mut seen = HashSet::new();
    if let Some(v) = variants.iter().find(|v| !seen.insert(**v)) {
        return Err(HarnessError::Invalid(format!("ablation {v} requested twice")));
    }
    let configs: Vec<ExperimentConfig> = variants.iter().map(|&a| ablation_config(cfg, a)).collect();
    for c in &configs {
        c.validate()?;
    }
    let labels: Vec<&str> = variants.iter().map(|a| a.as_str()).collect();
    let (rows, runs) = run_grid(cfg, &configs, &labels, seeds, out)?;
    if let Some(out) = out {
        write_file(&out.join("ablation.csv"), &summary_csv("variant", &rows))?;
    }
    Ok((rows, runs))
}

/// Runs every `(config, seed)` pair of a grid on one shared dataset.
fn run_grid(
    base: &ExperimentConfig,
    configs: &[ExperimentConfig],
    labels: &[&str],
    seeds: &[u64],
    out: Option<&Path>,
) -> Result<(Vec<SummaryRow>, Vec<RunOutput>), HarnessError> {
    let started = Instant::now();
    let prep = prepare(base)?;
    if let Some(out) = out {
        write_dataset_files(&prep.data, &out.join("data"))?;
    }
    let jobs: Vec<_> = configs
        .iter()
        .zip(labels)
        .flat_map(|(c, label)| seeds.iter().map(move |&s| (c, s, out.map(|o| seed_dir(&o.join(label), s)))))
        .collect();
    let mut runs = run_jobs(&jobs, &prep)?.into_iter();
    let wall = started.elapsed().as_secs_f64();
    let mut rows = Vec::new();
    let mut outputs = Vec::new();
    for (c, label) in configs.iter().zip(labels) {
        let group: Vec<SeedRun> = runs.by_ref().take(seeds.len()).collect();
        let output = assemble(c, group, wall, out.map(|o| o.join(label)).as_deref())?;
        rows.push(output.summary(label, Split::Dev));
        outputs.push(output);
    }
    Ok((rows, outputs))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    Tau,
    Gamma,
    Lambda,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::Tau => "tau",
            SweepParam::Gamma => "gamma",
            SweepParam::Lambda => "lambda",
        }
    }

    pub fn check(self, v: f64) -> Result<(), HarnessError> {
        let ok = match self {
            SweepParam::Tau | SweepParam::Gamma => (0.0..=1.0).contains(&v),
            SweepParam::Lambda => v >= 0.0 && v.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(HarnessError::Invalid(format!("{} = {v} is out of domain", self.as_str())))
        }
    }
}

impl FromStr for SweepParam {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tau" | "τ" | "eval.tau" => Ok(SweepParam::Tau),
            "gamma" | "γ" | "loss.gamma" => Ok(SweepParam::Gamma),
            "lambda" | "λ" | "loss.lambda" => Ok(SweepParam::Lambda),
            _ => Err(HarnessError::Invalid(format!("cannot sweep `{s}` (tau, gamma or lambda)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub dev: SummaryRow,
}

/// Dev metrics for each value of `param`. A τ sweep only evaluates: it reuses
/// the checkpoints of a `train` run in `out`, else those under `out/base`,
/// training the latter first if absent. γ and λ
/// sweeps retrain per value under `out/<param>-<value>`. Writes `out/sweep-<param>.csv`.
pub fn sweep(
    cfg: &ExperimentConfig,
    param: SweepParam,
    values: &[f64],
    seeds: &[u64],
    out: Option<&Path>,
) -> Result<Vec<SweepRow>, HarnessError> {
    check_seeds(seeds)?;
    if values.is_empty() {
        return Err(HarnessError::Invalid("no sweep values given".into()));
    }
    for &v in values {
        param.check(v)?;
    }
    let labels: Vec<String> = values.iter().map(|v| format!("{}-{v}", param.as_str())).collect();
    let rows = match param {
        SweepParam::Tau => {
            let prep = prepare(cfg)?;
            let base = out.map(|o| o.join("base"));
            let has_all = |dir: &Path| seeds.iter().all(|&s| seed_dir(dir, s).join(CHECKPOINT_FILE).is_file());
            let existing = out.into_iter().chain(base.as_deref()).find(|d| has_all(d));
            let models = match existing {
                Some(dir) => seeds.iter().map(|&s| load_model(&seed_dir(dir, s))).collect::<Result<Vec<_>, _>>()?,
                None => {
                    if let Some(b) = &base {
                        write_dataset_files(&prep.data, &b.join("data"))?;
                    }
                    run_prepared(cfg, &prep, seeds, base.as_deref())?.models
                }
            };
            tau_sweep(cfg, &prep, &models, values)?
        }
        SweepParam::Gamma | SweepParam::Lambda => {
            let configs: Vec<ExperimentConfig> = values
                .iter()
                .map(|&v| {
                    let mut c = cfg.clone();
                    match param {
                        SweepParam::Gamma => c.loss.gamma = v,
                        _ => c.loss.lambda = v,
                    }
                    c
                })
                .collect();
            let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
            let (rows, _) = run_grid(cfg, &configs, &refs, seeds, out)?;
            values.iter().zip(rows).map(|(&value, dev)| SweepRow { value, dev }).collect()
        }
    };
    if let Some(out) = out {
        let summary: Vec<SummaryRow> =
            rows.iter().map(|r| SummaryRow { label: r.value.to_string(), ..r.dev.clone() }).collect();
        write_file(&out.join(format!("sweep-{}.csv", param.as_str())), &summary_csv(param.as_str(), &summary))?;
    }
    Ok(rows)
}

/// Evaluates fixed models on dev at each stop threshold. Models are not modified.
pub fn tau_sweep(cfg: &ExperimentConfig, prep: &Prepared, models: &[Model], values: &[f64]) -> Result<Vec<SweepRow>, HarnessError> {
    let mut rows = Vec::with_capacity(values.len());
    for &tau in values {
        SweepParam::Tau.check(tau)?;
        let mut means = Vec::with_capacity(models.len());
        for m in models {
            let rule = ActRule { tau, ..act_rule(cfg, m.config()) };
            means.push(evaluate_policy(m, &prep.ctx, &prep.dev, &rule, OracleMode::None, &cfg.metrics)?.0.mean);
        }
        rows.push(SweepRow { value: tau, dev: summarize(&format!("tau-{tau}"), &means) });
    }
    Ok(rows)
}
