use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// How the stop and direction branches share encoders and decoders.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    SharedEncDec,
    SharedEnc,
    SharedDec,
    SeparateEncDec,
    /// Single decoder with a 4-way head; no separate stop branch.
    OneBranch,
}

impl Variant {
    pub const ALL: [Variant; 5] =
        [Variant::SharedEncDec, Variant::SharedEnc, Variant::SharedDec, Variant::SeparateEncDec, Variant::OneBranch];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::SharedEncDec => "SHARED_ENC_DEC",
            Variant::SharedEnc => "SHARED_ENC",
            Variant::SharedDec => "SHARED_DEC",
            Variant::SeparateEncDec => "SEPARATE_ENC_DEC",
            Variant::OneBranch => "ONE_BRANCH",
        }
    }

    pub fn encoders(self) -> usize {
        match self {
            Variant::SharedDec | Variant::SeparateEncDec => 2,
            _ => 1,
        }
    }

    pub fn decoders(self) -> usize {
        match self {
            Variant::SharedEnc | Variant::SeparateEncDec => 2,
            _ => 1,
        }
    }

    /// Encoders read by each decoder.
    pub(crate) fn decoder_inputs(self) -> Vec<Vec<usize>> {
        match self {
            Variant::SharedEncDec | Variant::OneBranch => vec![vec![0]],
            Variant::SharedEnc => vec![vec![0], vec![0]],
            Variant::SharedDec => vec![vec![0, 1]],
            Variant::SeparateEncDec => vec![vec![0], vec![1]],
        }
    }

    /// Decoder feeding the (direction, stop) heads.
    pub(crate) fn head_decoders(self) -> (usize, usize) {
        match self {
            Variant::SharedEnc | Variant::SeparateEncDec => (0, 1),
            _ => (0, 0),
        }
    }

    pub fn is_one_branch(self) -> bool {
        self == Variant::OneBranch
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| ModelError::Config(format!("unknown variant `{s}`")))
    }
}

/// One convolution layer: `kernels` filters of `size x size`, no padding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvLayer {
    pub kernels: usize,
    pub size: usize,
    pub stride: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub word_embed: usize,
    /// Hidden units per direction of the text encoder.
    pub text_hidden: usize,
    pub conv: Vec<ConvLayer>,
    pub visual_dim: usize,
    pub obs_channels: usize,
    pub obs_grid: usize,
    pub trajectory_hidden: usize,
    pub action_embed: usize,
    pub time_embed: usize,
    /// Largest step index with its own time embedding; later steps reuse it.
    pub t_max: usize,
    pub variant: Variant,
    pub key_point_gating: bool,
}

impl ModelConfig {
    /// Desk-scale defaults.
    pub fn desk(vocab_size: usize) -> Self {
        Self {
            vocab_size,
            word_embed: 32,
            text_hidden: 64,
            conv: vec![ConvLayer { kernels: 16, size: 3, stride: 2 }, ConvLayer { kernels: 32, size: 3, stride: 2 }],
            visual_dim: 64,
            obs_channels: 9,
            obs_grid: 16,
            trajectory_hidden: 64,
            action_embed: 16,
            time_embed: 32,
            t_max: crate::world::DEFAULT_T_MAX,
            variant: Variant::SharedEncDec,
            key_point_gating: true,
        }
    }

    /// Full-size layer widths: 256-unit recurrent layers and one 8x8 stride-4 convolution.
    pub fn full_scale(vocab_size: usize) -> Self {
        Self {
            text_hidden: 256,
            trajectory_hidden: 256,
            conv: vec![ConvLayer { kernels: 32, size: 8, stride: 4 }],
            ..Self::desk(vocab_size)
        }
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    /// Spatial side length after each convolution layer.
    pub fn conv_sides(&self) -> Vec<usize> {
        let mut side = self.obs_grid;
        self.conv
            .iter()
            .map(|l| {
                side = if side >= l.size { (side - l.size) / l.stride + 1 } else { 0 };
                side
            })
            .collect()
    }

    /// Width of the flattened convolution output.
    pub fn conv_out(&self) -> usize {
        match (self.conv.last(), self.conv_sides().last()) {
            (Some(l), Some(&s)) => l.kernels * s * s,
            _ => self.obs_channels * self.obs_grid * self.obs_grid,
        }
    }

    pub fn direction_classes(&self) -> usize {
        if self.variant.is_one_branch() {
            4
        } else {
            3
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let dims = [
            ("vocab_size", self.vocab_size),
            ("word_embed", self.word_embed),
            ("text_hidden", self.text_hidden),
            ("visual_dim", self.visual_dim),
            ("obs_channels", self.obs_channels),
            ("obs_grid", self.obs_grid),
            ("trajectory_hidden", self.trajectory_hidden),
            ("action_embed", self.action_embed),
            ("time_embed", self.time_embed),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(ModelError::Config(format!("{name} must be positive")));
        }
        if self.conv.iter().any(|l| l.kernels == 0 || l.size == 0 || l.stride == 0) {
            return Err(ModelError::Config("convolution layers need positive kernels, size and stride".into()));
        }
        if self.conv_sides().contains(&0) {
            return Err(ModelError::Config(format!(
                "convolution stack {:?} does not fit a {} grid",
                self.conv, self.obs_grid
            )));
        }
        Ok(())
    }

    /// Closed-form scalar parameter count.
    pub fn parameter_count(&self) -> usize {
        let h = self.text_hidden;
        let lstm = |input: usize, hidden: usize| 4 * hidden * (input + hidden) + 4 * hidden;
        let mut conv = 0;
        let mut channels = self.obs_channels;
        for l in &self.conv {
            conv += l.kernels * channels * l.size * l.size + l.kernels;
            channels = l.kernels;
        }
        let encoder = self.vocab_size * self.word_embed
            + 2 * lstm(self.word_embed, h)
            + conv
            + self.visual_dim * self.conv_out()
            + self.visual_dim;
        let decoder = |reads: usize| {
            let input = reads * (2 * h + self.visual_dim) + self.action_embed;
            reads * 2 * h * self.trajectory_hidden
                + 5 * self.action_embed
                + lstm(input, self.trajectory_hidden)
                + (self.t_max + 1) * self.time_embed
                + self.time_embed
        };
        let head = |classes: usize| classes * (self.trajectory_hidden + self.time_embed) + classes;
        let decoders: usize = self.variant.decoder_inputs().iter().map(|r| decoder(r.len())).sum();
        let heads = if self.variant.is_one_branch() { head(4) } else { head(3) + head(2) };
        self.variant.encoders() * encoder + decoders + heads
    }
}
