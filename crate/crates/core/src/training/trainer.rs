use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::loss::TermList;
use super::{evaluate_policy, LossConfig, NavContext, OracleMode, Sample, SupervisionTrace, TrainingError};
use crate::metrics::{MetricsConfig, MetricsReport};
use crate::model::{ActRule, Model};
use crate::numeric::{AdamConfig, Gradients, ParamStore, Tape};
use crate::rng;
use crate::world::{Action, Episode};

/// Loss values of one teacher-forced episode.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EpisodeLoss {
    pub direction: f64,
    pub stop: f64,
    pub total: f64,
    pub clamped: usize,
}

/// Teacher-forced forward pass and gradients for one sample.
///
/// The environment is driven by the trace's actions; the model only sees
/// the resulting observations. Two-branch models get
/// `gamma * L_dir + (1 - gamma) * L_stop`; the one-branch model gets plain
/// 4-way cross-entropy on every step.
pub fn episode_loss(
    model: &Model,
    ctx: &NavContext,
    sample: &Sample,
    loss: &LossConfig,
) -> Result<(EpisodeLoss, Gradients), TrainingError> {
    let gating = model.config().key_point_gating;
    let trace = SupervisionTrace::new(&ctx.graph, &sample.route, gating)?;
    let one_branch = model.config().variant.is_one_branch();
    let mut tape = Tape::new(model.params());
    let mut state = model.start(&mut tape, &sample.instruction)?;
    let mut episode = Episode::new(&ctx.graph, sample.route.clone(), usize::MAX)?;
    let mut dir_terms = TermList::default();
    let mut stop_terms = TermList::default();
    for step in &trace.steps {
        debug_assert_eq!(episode.node(), step.node);
        let obs = ctx.observe(episode.node(), episode.heading());
        let vars = model.step(&mut tape, &mut state, &obs)?;
        if one_branch {
            dir_terms.push(&mut tape, vars.direction, step.action.index(), 1.0)?;
        } else {
            if let Some(d) = step.direction {
                dir_terms.push(&mut tape, vars.direction, d.index(), 1.0)?;
            }
            let s = vars.stop.expect("two-branch models have a stop head");
            if step.cont {
                stop_terms.push(&mut tape, s, 0, 1.0)?;
            } else {
                stop_terms.push(&mut tape, s, 1, loss.lambda)?;
            }
        }
        if step.action != Action::Stop {
            model.advance(&mut state, step.action);
        }
        episode.step(step.action)?;
    }
    let l_dir = dir_terms.sum(&mut tape)?;
    let (total, l_stop) = if one_branch {
        (l_dir, None)
    } else {
        let l_stop = stop_terms.sum(&mut tape)?;
        let a = tape.scale(l_dir, loss.gamma);
        let b = tape.scale(l_stop, 1.0 - loss.gamma);
        (tape.add(a, b)?, Some(l_stop))
    };
    let grads = tape.backward(total)?;
    let out = EpisodeLoss {
        direction: tape.value(l_dir)[0],
        stop: l_stop.map_or(0.0, |v| tape.value(v)[0]),
        total: tape.value(total)[0],
        clamped: dir_terms.clamped + stop_terms.clamped,
    };
    Ok((out, grads))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub l_dir: f64,
    pub l_stop: f64,
    pub l_total: f64,
    pub clamped: usize,
}

/// One pass over `data` in a seeded order, one optimizer step per episode.
///
/// A non-finite loss or gradient aborts the epoch before the offending
/// update, so the model keeps its last good parameters.
pub fn train_epoch(
    model: &mut Model,
    ctx: &NavContext,
    data: &[Sample],
    loss: &LossConfig,
    adam: &AdamConfig,
    seed: u64,
    epoch: usize,
) -> Result<EpochStats, TrainingError> {
    if data.is_empty() {
        return Err(TrainingError::Data("training set is empty".into()));
    }
    loss.validate()?;
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut rng::stream(&format!("train.shuffle.{epoch}"), seed));
    let mut stats = EpochStats { epoch, ..Default::default() };
    for (k, &i) in order.iter().enumerate() {
        let (l, grads) = episode_loss(model, ctx, &data[i], loss)?;
        if !l.total.is_finite() || !grads.is_finite() {
            return Err(TrainingError::Diverged { epoch, episode: k });
        }
        model.params_mut().adam_step(&grads, adam)?;
        stats.l_dir += l.direction;
        stats.l_stop += l.stop;
        stats.l_total += l.total;
        stats.clamped += l.clamped;
    }
    let n = data.len() as f64;
    stats.l_dir /= n;
    stats.l_stop /= n;
    stats.l_total /= n;
    Ok(stats)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss: LossConfig,
    pub adam: AdamConfig,
    pub max_epochs: usize,
    /// Epochs without a dev TC improvement before stopping.
    pub patience: usize,
    pub act: ActRule,
    pub metrics: MetricsConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            loss: LossConfig::default(),
            adam: AdamConfig::default(),
            max_epochs: 20,
            patience: 10,
            act: ActRule::default(),
            metrics: MetricsConfig::default(),
        }
    }
}

/// Result of [`fit`]: the best parameters by dev TC and the per-epoch log.
#[derive(Clone, Debug)]
pub struct FitOutcome {
    pub best: ParamStore,
    pub best_epoch: usize,
    pub best_dev: MetricsReport,
    pub log: Vec<(EpochStats, f64, f64, f64)>,
    /// Set when training stopped on a non-finite loss.
    pub diverged: Option<TrainingError>,
}

/// One training log line: epoch, L_dir, L_stop, L_total, dev TC, dev SED, seconds.
pub fn format_log_line(s: &EpochStats, dev_tc: f64, dev_sed: f64, seconds: f64) -> String {
    format!(
        "{}\t{:.6}\t{:.6}\t{:.6}\t{:.4}\t{:.4}\t{:.2}",
        s.epoch, s.l_dir, s.l_stop, s.l_total, dev_tc, dev_sed, seconds
    )
}

/// Trains with early stopping on dev TC and returns the best parameters.
pub fn fit(
    model: &mut Model,
    ctx: &NavContext,
    train: &[Sample],
    dev: &[Sample],
    cfg: &TrainConfig,
    seed: u64,
    mut on_epoch: impl FnMut(&str),
) -> Result<FitOutcome, TrainingError> {
    if cfg.max_epochs == 0 {
        return Err(TrainingError::Config("max_epochs must be positive".into()));
    }
    let rule = cfg.act;
    let mut best = model.params().clone();
    let mut best_dev = evaluate_policy(model, ctx, dev, &rule, OracleMode::None, &cfg.metrics)?.0;
    let mut best_epoch = 0;
    let mut since_best = 0;
    let mut log = Vec::new();
    let mut diverged = None;
    for epoch in 1..=cfg.max_epochs {
        let started = Instant::now();
        let stats = match train_epoch(model, ctx, train, &cfg.loss, &cfg.adam, seed, epoch) {
            Ok(s) => s,
            Err(e @ TrainingError::Diverged { .. }) => {
                diverged = Some(e);
                break;
            }
            Err(e) => return Err(e),
        };
        let (dev_report, _) = evaluate_policy(model, ctx, dev, &rule, OracleMode::None, &cfg.metrics)?;
        let seconds = started.elapsed().as_secs_f64();
        on_epoch(&format_log_line(&stats, dev_report.mean.tc, dev_report.mean.sed, seconds));
        log.push((stats, dev_report.mean.tc, dev_report.mean.sed, seconds));
        if dev_report.mean.tc > best_dev.mean.tc || best_epoch == 0 {
            best = model.params().clone();
            best_dev = dev_report;
            best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    Ok(FitOutcome { best, best_epoch, best_dev, log, diverged })
}
