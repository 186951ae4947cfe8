use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Array, NumericError};

/// Index of a parameter inside a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct ParamEntry {
    pub name: String,
    pub value: Array,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

/// Named learnable arrays plus adaptive-moment optimizer state.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ParamStore {
    pub(crate) entries: Vec<ParamEntry>,
    index: BTreeMap<String, ParamId>,
    step: u64,
}

/// Adaptive-moment optimizer hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Gradients aligned with the parameters of one [`ParamStore`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub(crate) grads: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(store: &ParamStore) -> Self {
        Self { grads: store.entries.iter().map(|e| vec![0.0; e.value.len()]).collect() }
    }

    pub fn get(&self, id: ParamId) -> &[f64] {
        &self.grads[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut [f64] {
        &mut self.grads[id.0]
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.grads.iter().flatten().all(|g| g.is_finite())
    }

    /// Accumulates `other * scale` into `self`.
    pub fn add_scaled(&mut self, other: &Gradients, scale: f64) {
        for (a, b) in self.grads.iter_mut().zip(&other.grads) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.grads.iter_mut().flatten().for_each(|g| *g *= s);
    }
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Array) -> Result<ParamId, NumericError> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(NumericError::DuplicateParam(name));
        }
        let id = ParamId(self.entries.len());
        let n = value.len();
        self.entries.push(ParamEntry { name: name.clone(), value, m: vec![0.0; n], v: vec![0.0; n] });
        self.index.insert(name, id);
        Ok(id)
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.entries[id.0].name
    }

    pub fn value(&self, id: ParamId) -> &Array {
        &self.entries[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Array {
        &mut self.entries[id.0].value
    }

    pub fn get(&self, name: &str) -> Option<&Array> {
        self.id(name).map(|id| self.value(id))
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> + '_ {
        (0..self.entries.len()).map(ParamId)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> + '_ {
        self.entries.iter().map(|e| e.name.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        self.entries.iter().map(|e| e.value.len()).sum()
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn moments(&self, id: ParamId) -> (&[f64], &[f64]) {
        let e = &self.entries[id.0];
        (&e.m, &e.v)
    }

    pub(crate) fn set_state(&mut self, id: ParamId, m: Vec<f64>, v: Vec<f64>) {
        self.entries[id.0].m = m;
        self.entries[id.0].v = v;
    }

    pub(crate) fn set_step(&mut self, step: u64) {
        self.step = step;
    }

    /// One bias-corrected adaptive-moment update.
    pub fn adam_step(&mut self, grads: &Gradients, cfg: &AdamConfig) -> Result<(), NumericError> {
        if !(cfg.lr > 0.0) {
            return Err(NumericError::InvalidHyper(format!("learning rate must be > 0, got {}", cfg.lr)));
        }
        if !(0.0..1.0).contains(&cfg.beta1) || !(0.0..1.0).contains(&cfg.beta2) || cfg.eps < 0.0 {
            return Err(NumericError::InvalidHyper(format!(
                "betas must lie in [0,1) and eps >= 0, got ({}, {}), {}",
                cfg.beta1, cfg.beta2, cfg.eps
            )));
        }
        if grads.grads.len() != self.entries.len() {
            return Err(NumericError::Shape {
                op: "adam_step",
                detail: format!("{} gradients for {} parameters", grads.grads.len(), self.entries.len()),
            });
        }
        for (e, g) in self.entries.iter().zip(&grads.grads) {
            if g.len() != e.value.len() {
                return Err(NumericError::Shape {
                    op: "adam_step",
                    detail: format!("gradient for `{}` has {} entries, parameter has {}", e.name, g.len(), e.value.len()),
                });
            }
        }
        self.step += 1;
        let t = self.step as f64;
        let bc1 = 1.0 - cfg.beta1.powf(t);
        let bc2 = 1.0 - cfg.beta2.powf(t);
        for (e, g) in self.entries.iter_mut().zip(&grads.grads) {
            let value = e.value.data_mut();
            for i in 0..g.len() {
                e.m[i] = cfg.beta1 * e.m[i] + (1.0 - cfg.beta1) * g[i];
                e.v[i] = cfg.beta2 * e.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                let m_hat = e.m[i] / bc1;
                let v_hat = e.v[i] / bc2;
                value[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_store(w: f64) -> (ParamStore, ParamId) {
        let mut s = ParamStore::new();
        let id = s.insert("w", Array::scalar(w)).unwrap();
        (s, id)
    }

    #[test]
    fn first_step_moves_by_lr_against_sign() {
        for g in [2.5, -0.01] {
            let (mut s, id) = scalar_store(1.0);
            let mut grads = Gradients::zeros_like(&s);
            grads.get_mut(id)[0] = g;
            let cfg = AdamConfig { lr: 0.1, eps: 0.0, ..AdamConfig::default() };
            s.adam_step(&grads, &cfg).unwrap();
            let delta = s.value(id).data()[0] - 1.0;
            assert!((delta + 0.1 * g.signum()).abs() < 1e-12, "delta {delta}");
        }
    }

    #[test]
    fn zero_grad_advances_counter_only() {
        let (mut s, id) = scalar_store(0.7);
        let grads = Gradients::zeros_like(&s);
        s.adam_step(&grads, &AdamConfig::default()).unwrap();
        assert_eq!(s.value(id).data()[0], 0.7);
        assert_eq!(s.step(), 1);
    }

    #[test]
    fn three_steps_on_square_decrease() {
        // Hand trace with lr 0.1, betas (0.9, 0.999): trace frozen from a scalar reference run.
        let (mut s, id) = scalar_store(1.0);
        let cfg = AdamConfig { lr: 0.1, beta1: 0.9, beta2: 0.999, eps: 1e-8 };
        let mut prev = 1.0;
        let mut trace = vec![];
        for _ in 0..3 {
            let mut grads = Gradients::zeros_like(&s);
            grads.get_mut(id)[0] = 2.0 * prev;
            s.adam_step(&grads, &cfg).unwrap();
            let w = s.value(id).data()[0];
            assert!(w < prev);
            trace.push(w);
            prev = w;
        }
        assert!((trace[0] - 0.900_000_000_5).abs() < 1e-12);
        assert!((trace[1] - 0.800_412_228_691_792_7).abs() < 1e-12, "{trace:?}");
        assert!((trace[2] - 0.701_586_272_946_03).abs() < 1e-12, "{trace:?}");
    }

    #[test]
    fn rejects_nonpositive_lr_and_mismatch() {
        let (mut s, _) = scalar_store(1.0);
        let grads = Gradients::zeros_like(&s);
        let cfg = AdamConfig { lr: 0.0, ..AdamConfig::default() };
        assert!(s.adam_step(&grads, &cfg).is_err());
        let bad = Gradients { grads: vec![vec![0.0, 0.0]] };
        assert!(s.adam_step(&bad, &AdamConfig::default()).is_err());
        assert_eq!(s.step(), 0);
    }

    #[test]
    fn duplicate_names_rejected() {
        let (mut s, _) = scalar_store(1.0);
        assert!(s.insert("w", Array::scalar(0.0)).is_err());
    }

    #[test]
    fn deterministic_updates() {
        let run = || {
            let (mut s, id) = scalar_store(0.3);
            for k in 0..5 {
                let mut g = Gradients::zeros_like(&s);
                g.get_mut(id)[0] = (k as f64).sin();
                s.adam_step(&g, &AdamConfig::default()).unwrap();
            }
            s
        };
        assert_eq!(run(), run());
    }
}
