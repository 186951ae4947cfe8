use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::numeric::Tape;
use crate::world::Action;

use super::StepVars;

/// Head probabilities at one step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyOutput {
    /// `(non-stop, stop)`. For the one-branch variant this is derived from the STOP entry of `direction`.
    pub stop: [f64; 2],
    /// Over FORWARD, LEFT, RIGHT, plus STOP for the one-branch variant.
    pub direction: Vec<f64>,
}

impl PolicyOutput {
    pub fn from_step(tape: &Tape, vars: StepVars) -> Self {
        let direction = tape.value(vars.direction).to_vec();
        let stop = match vars.stop {
            Some(s) => {
                let v = tape.value(s);
                [v[0], v[1]]
            }
            None => {
                let p = direction.get(Action::Stop.index()).copied().unwrap_or(0.0);
                [1.0 - p, p]
            }
        };
        Self { stop, direction }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, dist) in [("stop", &self.stop[..]), ("direction", &self.direction[..])] {
            let sum: f64 = dist.iter().sum();
            if dist.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > 1e-6 {
                return Err(ModelError::Input(format!("{name} distribution {dist:?} is not a probability vector")));
            }
        }
        Ok(())
    }
}

/// Inference rule parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActRule {
    /// Stop threshold on the stop probability.
    pub tau: f64,
    /// Directions are only chosen at key points; elsewhere the agent goes forward.
    pub key_point_gating: bool,
    /// Argmax over a single 4-way head instead of the two-branch rule.
    pub one_branch: bool,
}

impl Default for ActRule {
    fn default() -> Self {
        Self { tau: 0.5, key_point_gating: true, one_branch: false }
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Maps head probabilities to an action.
pub fn act(out: &PolicyOutput, at_key_point: bool, rule: &ActRule) -> Action {
    if rule.one_branch {
        let a = Action::from_index(argmax(&out.direction)).unwrap_or(Action::Forward);
        if rule.key_point_gating && !at_key_point && matches!(a, Action::Left | Action::Right) {
            return Action::Forward;
        }
        return a;
    }
    if out.stop[1] >= rule.tau {
        return Action::Stop;
    }
    if rule.key_point_gating && !at_key_point {
        return Action::Forward;
    }
    Action::from_index(argmax(&out.direction[..3])).unwrap_or(Action::Forward)
}
