use serde::{Deserialize, Serialize};

use super::TrainingError;
use crate::numeric::{Tape, Var};

/// Floor applied to probabilities before taking logarithms.
pub const LOG_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    /// Weight of the terminal stop label.
    pub lambda: f64,
    /// Share of the direction loss in the total.
    pub gamma: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { lambda: 20.0, gamma: 0.6 }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<(), TrainingError> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(TrainingError::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(TrainingError::Config(format!("gamma must lie in [0, 1], got {}", self.gamma)));
        }
        Ok(())
    }
}

/// A loss value plus how many probabilities were clamped at [`LOG_EPS`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub clamped: usize,
}

fn neg_log(p: f64, clamped: &mut usize) -> f64 {
    if p < LOG_EPS {
        *clamped += 1;
    }
    -p.max(LOG_EPS).ln()
}

/// `-sum_t log p_t[label_t]` over the supervised steps.
pub fn direction_loss(p: &[Vec<f64>], labels: &[usize]) -> Result<LossValue, TrainingError> {
    if p.len() != labels.len() {
        return Err(TrainingError::Shape(format!("{} prediction steps vs {} labels", p.len(), labels.len())));
    }
    let mut clamped = 0;
    let mut value = 0.0;
    for (dist, &k) in p.iter().zip(labels) {
        let pk = *dist.get(k).ok_or_else(|| TrainingError::Shape(format!("label {k} outside {} classes", dist.len())))?;
        value += neg_log(pk, &mut clamped);
    }
    Ok(LossValue { value, clamped })
}

/// Weighted stop loss: `sum_t [-o_t log s_t1 - lambda (1 - o_t) log s_t2]`.
pub fn stop_loss(s: &[[f64; 2]], o: &[bool], lambda: f64) -> Result<LossValue, TrainingError> {
    if s.len() != o.len() {
        return Err(TrainingError::Shape(format!("{} prediction steps vs {} labels", s.len(), o.len())));
    }
    let mut clamped = 0;
    let mut value = 0.0;
    for (si, &cont) in s.iter().zip(o) {
        value += if cont { neg_log(si[0], &mut clamped) } else { lambda * neg_log(si[1], &mut clamped) };
    }
    Ok(LossValue { value, clamped })
}

/// Plain cross-entropy of two-class predictions; label 0 is "continue".
pub fn cross_entropy(s: &[[f64; 2]], labels: &[usize]) -> f64 {
    let mut value = 0.0;
    for (si, &k) in s.iter().zip(labels) {
        value += -si[k].max(LOG_EPS).ln();
    }
    value
}

pub fn total_loss(l_dir: f64, l_stop: f64, gamma: f64) -> f64 {
    gamma * l_dir + (1.0 - gamma) * l_stop
}

/// Tape counterpart of the losses: accumulates per-step terms, then sums.
#[derive(Default)]
pub(crate) struct TermList {
    terms: Vec<Var>,
    pub clamped: usize,
}

impl TermList {
    /// Adds `-weight * log(probs[k])`.
    pub fn push(&mut self, tape: &mut Tape, probs: Var, k: usize, weight: f64) -> Result<(), TrainingError> {
        let p = tape.slice(probs, k, 1)?;
        if tape.value(p)[0] < LOG_EPS {
            self.clamped += 1;
        }
        let l = tape.log(p, LOG_EPS)?;
        self.terms.push(tape.scale(l, -weight));
        Ok(())
    }

    pub fn sum(&self, tape: &mut Tape) -> Result<Var, TrainingError> {
        if self.terms.is_empty() {
            return Ok(tape.input_vec(vec![0.0]));
        }
        let joint = tape.concat(&self.terms)?;
        Ok(tape.sum(joint))
    }
}
