use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{NavContext, Sample, TrainingError};
use crate::metrics::{evaluate, MetricsConfig, MetricsReport};
use crate::model::{act, ActRule, Model, PolicyOutput};
use crate::numeric::Tape;
use crate::world::{reference_action, Action, Episode, NodeId};

/// Which branch, if any, is replaced by ground truth during a rollout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OracleMode {
    None,
    /// Reference directions whenever the agent stands on the reference path.
    OracleDirection,
    /// STOP exactly at the goal, never elsewhere.
    OracleStop,
}

impl OracleMode {
    pub fn as_str(self) -> &'static str {
        match self {
            OracleMode::None => "NONE",
            OracleMode::OracleDirection => "ORACLE_DIRECTION",
            OracleMode::OracleStop => "ORACLE_STOP",
        }
    }

    /// Mode for a pair of oracle switches; both at once is not a supported mode.
    pub fn from_flags(direction: bool, stop: bool) -> Result<Self, TrainingError> {
        match (direction, stop) {
            (false, false) => Ok(OracleMode::None),
            (true, false) => Ok(OracleMode::OracleDirection),
            (false, true) => Ok(OracleMode::OracleStop),
            (true, true) => Err(TrainingError::Config("oracle direction and oracle stop cannot be combined".into())),
        }
    }
}

impl fmt::Display for OracleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OracleMode {
    type Err = TrainingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [OracleMode::None, OracleMode::OracleDirection, OracleMode::OracleStop]
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| TrainingError::Config(format!("unknown oracle mode `{s}`")))
    }
}

/// An executed episode.
#[derive(Clone, Debug, PartialEq)]
pub struct Rollout {
    pub path: Vec<NodeId>,
    pub actions: Vec<Action>,
    /// Nodes at which each action was taken.
    pub nodes: Vec<NodeId>,
    pub outputs: Vec<PolicyOutput>,
}

fn direction_only(out: &PolicyOutput, at_key_point: bool, rule: &ActRule) -> Action {
    let no_stop = ActRule { tau: f64::INFINITY, ..*rule };
    let trimmed = PolicyOutput { stop: out.stop, direction: out.direction[..3].to_vec() };
    let one = ActRule { one_branch: false, ..no_stop };
    act(&trimmed, at_key_point, &one)
}

/// Runs the policy greedily from the head of `sample.route` until STOP or `t_max` moves.
pub fn rollout(
    model: &Model,
    ctx: &NavContext,
    sample: &Sample,
    rule: &ActRule,
    mode: OracleMode,
) -> Result<Rollout, TrainingError> {
    let route = &sample.route;
    let goal = *route.last().ok_or_else(|| TrainingError::Data("route is empty".into()))?;
    let mut episode = Episode::new(&ctx.graph, route.clone(), ctx.t_max)?;
    let mut tape = Tape::new(model.params());
    let mut state = model.start(&mut tape, &sample.instruction)?;
    let mut actions = Vec::new();
    let mut nodes = Vec::new();
    let mut outputs = Vec::new();
    while !episode.is_done() {
        let node = episode.node();
        let obs = ctx.observe(node, episode.heading());
        let vars = model.step(&mut tape, &mut state, &obs)?;
        let out = PolicyOutput::from_step(&tape, vars);
        let key = episode.at_key_point();
        let mut action = act(&out, key, rule);
        match mode {
            OracleMode::None => {}
            OracleMode::OracleStop => {
                action = if node == goal { Action::Stop } else { direction_only(&out, key, rule) };
            }
            OracleMode::OracleDirection => {
                if action != Action::Stop {
                    let on_path = route.iter().position(|&n| n == node).filter(|&i| i + 1 < route.len());
                    if let Some(a) = on_path.and_then(|i| reference_action(&ctx.graph, node, episode.heading(), route[i + 1])) {
                        action = a;
                    }
                }
            }
        }
        episode.step(action)?;
        if action != Action::Stop {
            model.advance(&mut state, action);
        }
        actions.push(action);
        nodes.push(node);
        outputs.push(out);
    }
    Ok(Rollout { path: episode.path().to_vec(), actions, nodes, outputs })
}

/// Rolls out every sample (in parallel) and scores the paths.
pub fn evaluate_policy(
    model: &Model,
    ctx: &NavContext,
    samples: &[Sample],
    rule: &ActRule,
    mode: OracleMode,
    metrics: &MetricsConfig,
) -> Result<(MetricsReport, Vec<Rollout>), TrainingError> {
    if samples.is_empty() {
        return Err(TrainingError::Data("no episodes to evaluate".into()));
    }
    let rollouts: Vec<Rollout> =
        samples.par_iter().map(|s| rollout(model, ctx, s, rule, mode)).collect::<Result<_, _>>()?;
    let pairs: Vec<_> = rollouts.iter().zip(samples).map(|(r, s)| (r.path.clone(), s.route.clone())).collect();
    let report = evaluate(&ctx.graph, &ctx.hops, &pairs, metrics)
        .map_err(|e| TrainingError::Data(e.to_string()))?;
    Ok((report, rollouts))
}
