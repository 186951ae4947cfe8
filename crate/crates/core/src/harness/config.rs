//! Flat `key = value` experiment configuration with dotted namespaces.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::metrics::{MetricsConfig, SedNorm};
use crate::model::{ActRule, ConvLayer, ModelConfig};
use crate::numeric::AdamConfig;
use crate::training::{LossConfig, TrainConfig};
use crate::world::{CityConfig, ObservationConfig, RouteSpec, DEFAULT_T_MAX};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub city_seed: u64,
    pub city: CityConfig,
    pub route: RouteSpec,
    pub data_seed: u64,
    pub train_count: usize,
    pub dev_count: usize,
    pub test_count: usize,
    pub obs: ObservationConfig,
    pub model: ModelConfig,
    pub loss: LossConfig,
    pub adam: AdamConfig,
    pub max_epochs: usize,
    pub patience: usize,
    pub tau: f64,
    pub t_max: usize,
    pub metrics: MetricsConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let vocab = crate::language::Vocabulary::standard().len();
        Self {
            city_seed: 3,
            city: CityConfig::default(),
            route: RouteSpec::default(),
            data_seed: 17,
            train_count: 2000,
            dev_count: 400,
            test_count: 400,
            obs: ObservationConfig::default(),
            model: ModelConfig::desk(vocab),
            loss: LossConfig::default(),
            adam: AdamConfig::default(),
            max_epochs: 5,
            patience: 10,
            tau: 0.5,
            t_max: DEFAULT_T_MAX,
            metrics: MetricsConfig::default(),
        }
    }
}

/// Every key with a one-line description, in canonical order.
pub const KEYS: &[(&str, &str)] = &[
    ("city.seed", "seed of the generated street graph"),
    ("city.node_count", "number of intersections and street nodes"),
    ("city.grid_extent", "side of the lattice the streets are laid on"),
    ("city.landmark_density", "probability that a node carries a landmark"),
    ("city.distractor_prob", "probability that a landmark gets a same-kind twin 2-3 hops away"),
    ("city.max_degree", "maximum node degree"),
    ("city.spacing", "distance between lattice neighbors"),
    ("city.jitter", "node position jitter as a fraction of the spacing"),
    ("route.min_len", "minimum route length in nodes"),
    ("route.max_len", "maximum route length in nodes"),
    ("route.min_key_points", "minimum key points on a route, goal excluded"),
    ("route.max_key_points", "maximum key points on a route, goal excluded"),
    ("route.max_attempts", "route sampling attempts before giving up"),
    ("data.seed", "base seed of the train/dev/test splits"),
    ("data.train", "training episodes"),
    ("data.dev", "development episodes"),
    ("data.test", "test episodes"),
    ("obs.grid", "observation grid side"),
    ("obs.view_range", "half-width of the view window"),
    ("obs.street_channel", "render streets as an extra channel"),
    ("obs.landmark_offset", "landmark distance from its node"),
    ("model.preset", "desk or full; resets every model width when applied"),
    ("model.word_embed", "word embedding size"),
    ("model.text_hidden", "text LSTM units per direction"),
    ("model.conv", "convolution stack, e.g. 16x3s2,32x3s2"),
    ("model.visual_dim", "visual feature size"),
    ("model.trajectory_hidden", "trajectory LSTM units"),
    ("model.action_embed", "previous-action embedding size"),
    ("model.time_embed", "time embedding size"),
    ("model.variant", "SHARED_ENC_DEC, SHARED_ENC, SHARED_DEC, SEPARATE_ENC_DEC or ONE_BRANCH"),
    ("model.key_point_gating", "choose directions only at key points"),
    ("loss.lambda", "weight of the stop label"),
    ("loss.gamma", "share of the direction loss"),
    ("optim.lr", "learning rate"),
    ("optim.beta1", "first-moment decay"),
    ("optim.beta2", "second-moment decay"),
    ("optim.eps", "denominator floor"),
    ("train.max_epochs", "epoch limit"),
    ("train.patience", "epochs without dev TC improvement before stopping"),
    ("eval.tau", "stop threshold"),
    ("eval.t_max", "episode horizon in moves"),
    ("metrics.tc_radius", "hops from the goal that count as success"),
    ("metrics.sed_norm", "max or reference"),
    ("metrics.cls_theta", "CLS length scale in hops"),
    ("metrics.dtw_threshold", "SDTW threshold in hops"),
];

fn conv_text(layers: &[ConvLayer]) -> String {
    layers.iter().map(|l| format!("{}x{}s{}", l.kernels, l.size, l.stride)).collect::<Vec<_>>().join(",")
}

fn parse_conv(v: &str) -> Option<Vec<ConvLayer>> {
    v.split(',')
        .map(|part| {
            let (k, rest) = part.trim().split_once('x')?;
            let (size, stride) = rest.split_once('s')?;
            Some(ConvLayer { kernels: k.parse().ok()?, size: size.parse().ok()?, stride: stride.parse().ok()? })
        })
        .collect()
}

impl ExperimentConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            loss: self.loss,
            adam: self.adam,
            max_epochs: self.max_epochs,
            patience: self.patience,
            act: self.act_rule(),
            metrics: self.metrics.clone(),
        }
    }

    pub fn act_rule(&self) -> ActRule {
        ActRule {
            tau: self.tau,
            key_point_gating: self.model.key_point_gating,
            one_branch: self.model.variant.is_one_branch(),
        }
    }

    /// Value of `key` as config text.
    pub fn get(&self, key: &str) -> Result<String, HarnessError> {
        let m = &self.model;
        Ok(match key {
            "city.seed" => self.city_seed.to_string(),
            "city.node_count" => self.city.node_count.to_string(),
            "city.grid_extent" => self.city.grid_extent.to_string(),
            "city.landmark_density" => self.city.landmark_density.to_string(),
            "city.distractor_prob" => self.city.distractor_prob.to_string(),
            "city.max_degree" => self.city.max_degree.to_string(),
            "city.spacing" => self.city.spacing.to_string(),
            "city.jitter" => self.city.jitter.to_string(),
            "route.min_len" => self.route.min_len.to_string(),
            "route.max_len" => self.route.max_len.to_string(),
            "route.min_key_points" => self.route.min_key_points.to_string(),
            "route.max_key_points" => self.route.max_key_points.to_string(),
            "route.max_attempts" => self.route.max_attempts.to_string(),
            "data.seed" => self.data_seed.to_string(),
            "data.train" => self.train_count.to_string(),
            "data.dev" => self.dev_count.to_string(),
            "data.test" => self.test_count.to_string(),
            "obs.grid" => self.obs.grid.to_string(),
            "obs.view_range" => self.obs.view_range.to_string(),
            "obs.street_channel" => self.obs.street_channel.to_string(),
            "obs.landmark_offset" => self.obs.landmark_offset.to_string(),
            "model.preset" => {
                let desk = ModelConfig { variant: m.variant, key_point_gating: m.key_point_gating, ..self.preset("desk")? };
                if *m == desk { "desk" } else { "custom" }.to_string()
            }
            "model.word_embed" => m.word_embed.to_string(),
            "model.text_hidden" => m.text_hidden.to_string(),
            "model.conv" => conv_text(&m.conv),
            "model.visual_dim" => m.visual_dim.to_string(),
            "model.trajectory_hidden" => m.trajectory_hidden.to_string(),
            "model.action_embed" => m.action_embed.to_string(),
            "model.time_embed" => m.time_embed.to_string(),
            "model.variant" => m.variant.to_string(),
            "model.key_point_gating" => m.key_point_gating.to_string(),
            "loss.lambda" => self.loss.lambda.to_string(),
            "loss.gamma" => self.loss.gamma.to_string(),
            "optim.lr" => self.adam.lr.to_string(),
            "optim.beta1" => self.adam.beta1.to_string(),
            "optim.beta2" => self.adam.beta2.to_string(),
            "optim.eps" => self.adam.eps.to_string(),
            "train.max_epochs" => self.max_epochs.to_string(),
            "train.patience" => self.patience.to_string(),
            "eval.tau" => self.tau.to_string(),
            "eval.t_max" => self.t_max.to_string(),
            "metrics.tc_radius" => self.metrics.tc_radius.to_string(),
            "metrics.sed_norm" => match self.metrics.sed_norm {
                SedNorm::Max => "max",
                SedNorm::Reference => "reference",
            }
            .to_string(),
            "metrics.cls_theta" => self.metrics.cls_theta.to_string(),
            "metrics.dtw_threshold" => self.metrics.dtw_threshold.to_string(),
            _ => return Err(HarnessError::Config(format!("unknown key `{key}`"))),
        })
    }

    fn preset(&self, name: &str) -> Result<ModelConfig, HarnessError> {
        let vocab = self.model.vocab_size;
        match name {
            "desk" => Ok(ModelConfig::desk(vocab)),
            "full" => Ok(ModelConfig::full_scale(vocab)),
            other => Err(HarnessError::Config(format!("unknown model preset `{other}`"))),
        }
    }

    /// Sets `key` from config text.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        let v = value.trim();
        let bad = || HarnessError::Config(format!("invalid value `{v}` for `{key}`"));
        macro_rules! parse {
            () => {
                v.parse().map_err(|_| bad())?
            };
        }
        match key {
            "city.seed" => self.city_seed = parse!(),
            "city.node_count" => self.city.node_count = parse!(),
            "city.grid_extent" => self.city.grid_extent = parse!(),
            "city.landmark_density" => self.city.landmark_density = parse!(),
            "city.distractor_prob" => self.city.distractor_prob = parse!(),
            "city.max_degree" => self.city.max_degree = parse!(),
            "city.spacing" => self.city.spacing = parse!(),
            "city.jitter" => self.city.jitter = parse!(),
            "route.min_len" => self.route.min_len = parse!(),
            "route.max_len" => self.route.max_len = parse!(),
            "route.min_key_points" => self.route.min_key_points = parse!(),
            "route.max_key_points" => self.route.max_key_points = parse!(),
            "route.max_attempts" => self.route.max_attempts = parse!(),
            "data.seed" => self.data_seed = parse!(),
            "data.train" => self.train_count = parse!(),
            "data.dev" => self.dev_count = parse!(),
            "data.test" => self.test_count = parse!(),
            "obs.grid" => {
                self.obs.grid = parse!();
                self.model.obs_grid = self.obs.grid;
            }
            "obs.view_range" => self.obs.view_range = parse!(),
            "obs.street_channel" => {
                self.obs.street_channel = parse!();
                self.model.obs_channels = self.obs.channels();
            }
            "obs.landmark_offset" => self.obs.landmark_offset = parse!(),
            "model.preset" => {
                if v == "custom" {
                    return Ok(());
                }
                let keep = (self.model.variant, self.model.key_point_gating, self.model.obs_channels, self.model.obs_grid);
                self.model = self.preset(v)?;
                (self.model.variant, self.model.key_point_gating, self.model.obs_channels, self.model.obs_grid) = keep;
                if v == "full" {
                    self.adam.lr = 2.5e-4;
                }
            }
            "model.word_embed" => self.model.word_embed = parse!(),
            "model.text_hidden" => self.model.text_hidden = parse!(),
            "model.conv" => self.model.conv = parse_conv(v).ok_or_else(bad)?,
            "model.visual_dim" => self.model.visual_dim = parse!(),
            "model.trajectory_hidden" => self.model.trajectory_hidden = parse!(),
            "model.action_embed" => self.model.action_embed = parse!(),
            "model.time_embed" => self.model.time_embed = parse!(),
            "model.variant" => self.model.variant = v.parse().map_err(|_| bad())?,
            "model.key_point_gating" => self.model.key_point_gating = parse!(),
            "loss.lambda" => self.loss.lambda = parse!(),
            "loss.gamma" => self.loss.gamma = parse!(),
            "optim.lr" => self.adam.lr = parse!(),
            "optim.beta1" => self.adam.beta1 = parse!(),
            "optim.beta2" => self.adam.beta2 = parse!(),
            "optim.eps" => self.adam.eps = parse!(),
            "train.max_epochs" => self.max_epochs = parse!(),
            "train.patience" => self.patience = parse!(),
            "eval.tau" => self.tau = parse!(),
            "eval.t_max" => {
                self.t_max = parse!();
                self.model.t_max = self.t_max;
            }
            "metrics.tc_radius" => self.metrics.tc_radius = parse!(),
            "metrics.sed_norm" => {
                self.metrics.sed_norm = match v {
                    "max" => SedNorm::Max,
                    "reference" => SedNorm::Reference,
                    _ => return Err(bad()),
                }
            }
            "metrics.cls_theta" => self.metrics.cls_theta = parse!(),
            "metrics.dtw_threshold" => self.metrics.dtw_threshold = parse!(),
            _ => return Err(HarnessError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut cfg = Self::default();
        cfg.apply(text)?;
        Ok(cfg)
    }

    /// Applies `key = value` lines on top of `self`. `#` starts a comment.
    pub fn apply(&mut self, text: &str) -> Result<(), HarnessError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| HarnessError::ConfigLine { line: i + 1, msg };
            let (k, v) = line.split_once('=').ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            self.set(k.trim(), v).map_err(|e| err(e.to_string()))?;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |m: String| Err(HarnessError::Config(m));
        if self.train_count == 0 || self.dev_count == 0 || self.test_count == 0 {
            return fail("dataset splits must be nonempty".into());
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return fail(format!("eval.tau must lie in [0, 1], got {}", self.tau));
        }
        if self.max_epochs == 0 || self.patience == 0 {
            return fail("train.max_epochs and train.patience must be positive".into());
        }
        if self.t_max == 0 {
            return fail("eval.t_max must be positive".into());
        }
        if self.model.obs_channels != self.obs.channels() || self.model.obs_grid != self.obs.grid {
            return fail("model observation shape disagrees with obs.*".into());
        }
        self.loss.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        self.model.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        self.metrics.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(())
    }

    /// Every key in canonical order; parsing the result reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (key, _) in KEYS {
            if *key == "model.preset" {
                continue;
            }
            let _ = writeln!(out, "{key} = {}", self.get(key).expect("known key"));
        }
        out
    }

    /// `KEYS` with their default values, for documentation.
    pub fn documented_defaults() -> Vec<(&'static str, String, &'static str)> {
        let d = Self::default();
        KEYS.iter().map(|(k, doc)| (*k, d.get(k).expect("known key"), *doc)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Variant;

    #[test]
    fn text_round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.set("model.variant", "SHARED_DEC").unwrap();
        cfg.set("loss.lambda", "3.5").unwrap();
        cfg.set("model.conv", "8x5s3").unwrap();
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
        assert_eq!(ExperimentConfig::parse(&ExperimentConfig::default().to_text()).unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn unknown_key_is_an_error() {
        let e = ExperimentConfig::parse("# comment\nmodel.hidden = 3\n").unwrap_err();
        assert!(matches!(e, HarnessError::ConfigLine { line: 2, .. }), "{e}");
        assert!(ExperimentConfig::parse("loss.gamma = 1.5").is_err());
        assert!(ExperimentConfig::parse("model.variant = TRI").is_err());
        assert!(ExperimentConfig::parse("loss.gamma 0.5").is_err());
    }

    #[test]
    fn presets() {
        let cfg = ExperimentConfig::parse("model.variant = SHARED_ENC\nmodel.preset = full").unwrap();
        assert_eq!(cfg.model.text_hidden, 256);
        assert_eq!(cfg.model.variant, Variant::SharedEnc);
        assert_eq!(cfg.adam.lr, 2.5e-4);
        assert_eq!(ExperimentConfig::default().get("model.preset").unwrap(), "desk");
    }

    #[test]
    fn every_key_documented_and_gettable() {
        let docs = ExperimentConfig::documented_defaults();
        assert_eq!(docs.len(), KEYS.len());
    }
}
