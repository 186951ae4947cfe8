use std::sync::Arc;

use rand::Rng;

use super::{ModelConfig, ModelError};
use crate::language::Instruction;
use crate::numeric::{Array, ParamId, ParamStore, Tape, Var};
use crate::rng;
use crate::world::{Action, Observation};

/// Initial convolution bias; keeps empty patches off the relu kink.
const CONV_BIAS_INIT: f64 = 0.01;

/// Row of the action-embedding table used before the first move.
pub const START_ACTION: usize = 4;

#[derive(Clone, Debug)]
struct EncoderIds {
    embed: ParamId,
    fwd: (ParamId, ParamId),
    bwd: (ParamId, ParamId),
    conv: Vec<(ParamId, ParamId)>,
    visual: (ParamId, ParamId),
}

#[derive(Clone, Debug)]
struct DecoderIds {
    reads: Vec<usize>,
    attn: Vec<ParamId>,
    action: ParamId,
    lstm: (ParamId, ParamId),
    time: (ParamId, ParamId),
}

/// Parameters plus the wiring of one model variant.
#[derive(Clone, Debug)]
pub struct Model {
    config: ModelConfig,
    params: ParamStore,
    encoders: Vec<EncoderIds>,
    decoders: Vec<DecoderIds>,
    direction_head: (ParamId, ParamId),
    stop_head: Option<(ParamId, ParamId)>,
    patch_index: Vec<Arc<[usize]>>,
}

/// Per-episode recurrent state held on a tape.
#[derive(Clone, Debug)]
pub struct AgentState {
    /// Encoded instruction per encoder: token features `[len, 2H]` and their transpose.
    text: Vec<(Var, Var)>,
    /// `(h, c)` per decoder.
    hidden: Vec<(Var, Var)>,
    prev_action: usize,
    t: usize,
}

impl AgentState {
    pub fn t(&self) -> usize {
        self.t
    }

    /// Hidden state of decoder `d`.
    pub fn hidden(&self, d: usize) -> Var {
        self.hidden[d].0
    }

    pub fn text_features(&self, e: usize) -> Var {
        self.text[e].0
    }
}

/// Head outputs of one step, as tape variables.
#[derive(Clone, Copy, Debug)]
pub struct StepVars {
    /// `(non-stop, stop)` probabilities; absent for the one-branch variant.
    pub stop: Option<Var>,
    /// Direction probabilities, 3-way, or 4-way with STOP last for the one-branch variant.
    pub direction: Var,
}

fn uniform(rng: &mut impl Rng, shape: &[usize], bound: f64) -> Array {
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(-bound..=bound)).collect();
    Array::new(shape.to_vec(), data).expect("finite init")
}

/// im2col indices: column-major patches of a `[c, side, side]` input, one column per output cell.
fn patch_indices(channels: usize, side: usize, size: usize, stride: usize) -> Arc<[usize]> {
    let out = (side - size) / stride + 1;
    let rows = channels * size * size;
    let cols = out * out;
    let mut idx = vec![0; rows * cols];
    for c in 0..channels {
        for ky in 0..size {
            for kx in 0..size {
                let r = (c * size + ky) * size + kx;
                for oy in 0..out {
                    for ox in 0..out {
                        let src = (c * side + oy * stride + ky) * side + ox * stride + kx;
                        idx[r * cols + oy * out + ox] = src;
                    }
                }
            }
        }
    }
    idx.into()
}

struct Builder<'a, R: Rng> {
    store: ParamStore,
    rng: &'a mut R,
}

impl<R: Rng> Builder<'_, R> {
    fn weight(&mut self, name: String, rows: usize, cols: usize) -> Result<ParamId, ModelError> {
        let bound = 1.0 / (cols as f64).sqrt();
        Ok(self.store.insert(name, uniform(self.rng, &[rows, cols], bound))?)
    }

    fn table(&mut self, name: String, rows: usize, cols: usize) -> Result<ParamId, ModelError> {
        Ok(self.store.insert(name, uniform(self.rng, &[rows, cols], 0.5))?)
    }

    fn zeros(&mut self, name: String, len: usize) -> Result<ParamId, ModelError> {
        self.constant(name, len, 0.0)
    }

    fn constant(&mut self, name: String, len: usize, value: f64) -> Result<ParamId, ModelError> {
        Ok(self.store.insert(name, Array::vector(vec![value; len]))?)
    }

    /// LSTM weights with the forget-gate bias set to one.
    fn lstm(&mut self, prefix: &str, input: usize, hidden: usize) -> Result<(ParamId, ParamId), ModelError> {
        let w = self.weight(format!("{prefix}.w"), 4 * hidden, input + hidden)?;
        let mut b = vec![0.0; 4 * hidden];
        b[hidden..2 * hidden].iter_mut().for_each(|x| *x = 1.0);
        let b = self.store.insert(format!("{prefix}.b"), Array::vector(b))?;
        Ok((w, b))
    }
}

impl Model {
    /// Fresh parameters for `config`, drawn from `seed`.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut r = rng::stream("model.init", seed);
        let mut b = Builder { store: ParamStore::new(), rng: &mut r };
        let c = &config;
        let h = c.text_hidden;
        for e in 0..c.variant.encoders() {
            b.table(format!("enc{e}.embed"), c.vocab_size, c.word_embed)?;
            b.lstm(&format!("enc{e}.text_fwd"), c.word_embed, h)?;
            b.lstm(&format!("enc{e}.text_bwd"), c.word_embed, h)?;
            let mut channels = c.obs_channels;
            for (i, l) in c.conv.iter().enumerate() {
                b.weight(format!("enc{e}.conv{i}.w"), l.kernels, channels * l.size * l.size)?;
                b.constant(format!("enc{e}.conv{i}.b"), l.kernels, CONV_BIAS_INIT)?;
                channels = l.kernels;
            }
            b.weight(format!("enc{e}.visual.w"), c.visual_dim, c.conv_out())?;
            b.zeros(format!("enc{e}.visual.b"), c.visual_dim)?;
        }
        for (d, reads) in c.variant.decoder_inputs().iter().enumerate() {
            for &e in reads {
                b.weight(format!("dec{d}.attn{e}"), 2 * h, c.trajectory_hidden)?;
            }
            b.table(format!("dec{d}.action"), 5, c.action_embed)?;
            let input = reads.len() * (2 * h + c.visual_dim) + c.action_embed;
            b.lstm(&format!("dec{d}.lstm"), input, c.trajectory_hidden)?;
            b.table(format!("dec{d}.time.w"), c.t_max + 1, c.time_embed)?;
            b.zeros(format!("dec{d}.time.b"), c.time_embed)?;
        }
        let head_in = c.trajectory_hidden + c.time_embed;
        b.weight("head.direction.w".into(), c.direction_classes(), head_in)?;
        b.zeros("head.direction.b".into(), c.direction_classes())?;
        if !c.variant.is_one_branch() {
            b.weight("head.stop.w".into(), 2, head_in)?;
            b.zeros("head.stop.b".into(), 2)?;
        }
        Self::from_parts(config, b.store)
    }

    /// Rewires `params` (e.g. from a checkpoint) under `config`.
    pub fn from_parts(config: ModelConfig, params: ParamStore) -> Result<Self, ModelError> {
        config.validate()?;
        let id = |name: String| -> Result<ParamId, ModelError> {
            params.id(&name).ok_or(ModelError::MissingParam(name))
        };
        let pair = |prefix: String| -> Result<(ParamId, ParamId), ModelError> {
            Ok((id(format!("{prefix}.w"))?, id(format!("{prefix}.b"))?))
        };
        let mut encoders = Vec::new();
        for e in 0..config.variant.encoders() {
            encoders.push(EncoderIds {
                embed: id(format!("enc{e}.embed"))?,
                fwd: pair(format!("enc{e}.text_fwd"))?,
                bwd: pair(format!("enc{e}.text_bwd"))?,
                conv: (0..config.conv.len()).map(|i| pair(format!("enc{e}.conv{i}"))).collect::<Result<_, _>>()?,
                visual: pair(format!("enc{e}.visual"))?,
            });
        }
        let mut decoders = Vec::new();
        for (d, reads) in config.variant.decoder_inputs().into_iter().enumerate() {
            decoders.push(DecoderIds {
                attn: reads.iter().map(|e| id(format!("dec{d}.attn{e}"))).collect::<Result<_, _>>()?,
                reads,
                action: id(format!("dec{d}.action"))?,
                lstm: pair(format!("dec{d}.lstm"))?,
                time: pair(format!("dec{d}.time"))?,
            });
        }
        let direction_head = pair("head.direction".into())?;
        let stop_head = if config.variant.is_one_branch() { None } else { Some(pair("head.stop".into())?) };
        let expected = config.parameter_count();
        if params.scalar_count() != expected {
            return Err(ModelError::Config(format!(
                "parameter store holds {} scalars, config expects {expected}",
                params.scalar_count()
            )));
        }
        let mut patch_index = Vec::new();
        let mut side = config.obs_grid;
        let mut channels = config.obs_channels;
        for l in &config.conv {
            patch_index.push(patch_indices(channels, side, l.size, l.stride));
            side = (side - l.size) / l.stride + 1;
            channels = l.kernels;
        }
        Ok(Self { config, params, encoders, decoders, direction_head, stop_head, patch_index })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn into_params(self) -> ParamStore {
        self.params
    }

    /// Token features `[len, 2H]`: forward and backward LSTM states at each token.
    pub fn encode_text(&self, tape: &mut Tape, encoder: usize, tokens: &[usize]) -> Result<Var, ModelError> {
        if tokens.is_empty() {
            return Err(ModelError::Input("instruction is empty".into()));
        }
        if let Some(&bad) = tokens.iter().find(|&&t| t >= self.config.vocab_size) {
            return Err(ModelError::Input(format!("token {bad} outside vocabulary of {}", self.config.vocab_size)));
        }
        let ids = &self.encoders[encoder];
        let h = self.config.text_hidden;
        let table = tape.param(ids.embed);
        let embedded: Vec<Var> = tokens.iter().map(|&t| tape.row(table, t)).collect::<Result<_, _>>()?;
        let run = |tape: &mut Tape, (w, b): (ParamId, ParamId), order: &mut dyn Iterator<Item = usize>| {
            let (w, b) = (tape.param(w), tape.param(b));
            let mut hs = vec![None; tokens.len()];
            let mut state = (tape.input(Array::zeros(&[h])), tape.input(Array::zeros(&[h])));
            for i in order {
                state = tape.lstm(w, b, embedded[i], state.0, state.1)?;
                hs[i] = Some(state.0);
            }
            Ok::<_, ModelError>(hs.into_iter().map(|v| v.expect("every position visited")).collect::<Vec<_>>())
        };
        let fwd = run(tape, ids.fwd, &mut (0..tokens.len()))?;
        let bwd = run(tape, ids.bwd, &mut (0..tokens.len()).rev())?;
        let rows: Vec<Var> =
            fwd.iter().zip(&bwd).map(|(&f, &b)| tape.concat(&[f, b])).collect::<Result<_, _>>()?;
        Ok(tape.stack(&rows)?)
    }

    /// Soft attention of decoder state `h_prev` over token features `x` (`[len, 2H]`, with transpose `xt`).
    /// Returns the grounded feature and the attention weights.
    pub fn attend(&self, tape: &mut Tape, w_x: ParamId, h_prev: Var, x: Var, xt: Var) -> Result<(Var, Var), ModelError> {
        let w = tape.param(w_x);
        let query = tape.matmul(w, h_prev)?;
        let scores = tape.matmul(x, query)?;
        let alpha = tape.softmax(scores)?;
        let grounded = tape.matmul(xt, alpha)?;
        Ok((grounded, alpha))
    }

    /// CNN features of an observation.
    pub fn encode_visual(&self, tape: &mut Tape, encoder: usize, obs: &Observation) -> Result<Var, ModelError> {
        let c = &self.config;
        if obs.channels != c.obs_channels || obs.grid != c.obs_grid {
            return Err(ModelError::Input(format!(
                "observation [{}, {g}, {g}] does not match configured [{}, {s}, {s}]",
                obs.channels,
                c.obs_channels,
                g = obs.grid,
                s = c.obs_grid
            )));
        }
        let ids = &self.encoders[encoder];
        let mut x = tape.input(Array::new(vec![obs.data.len()], obs.data.clone())?);
        let sides = c.conv_sides();
        for (i, l) in c.conv.iter().enumerate() {
            let idx = Arc::clone(&self.patch_index[i]);
            let cols = sides[i] * sides[i];
            let rows = idx.len() / cols;
            let patches = tape.gather(x, idx, vec![rows, cols])?;
            let (w, b) = (tape.param(ids.conv[i].0), tape.param(ids.conv[i].1));
            let z = tape.affine(w, patches, Some(b))?;
            x = tape.relu(z);
            debug_assert_eq!(tape.shape(x), &[l.kernels, cols]);
        }
        let flat = tape.slice(x, 0, c.conv_out())?;
        let (w, b) = (tape.param(ids.visual.0), tape.param(ids.visual.1));
        let z = tape.affine(w, flat, Some(b))?;
        Ok(tape.tanh(z))
    }

    /// Time embedding of step `t`, clamped at `t_max`.
    pub fn time_embedding(&self, tape: &mut Tape, decoder: usize, t: usize) -> Result<Var, ModelError> {
        let (w, b) = self.decoders[decoder].time;
        let table = tape.param(w);
        let row = tape.row(table, t.min(self.config.t_max))?;
        let b = tape.param(b);
        Ok(tape.add(row, b)?)
    }

    /// One recurrent step over `[x_t.., v_t.., a_{t-1}]`.
    pub fn trajectory_step(
        &self,
        tape: &mut Tape,
        decoder: usize,
        input: Var,
        state: (Var, Var),
    ) -> Result<(Var, Var), ModelError> {
        let (w, b) = self.decoders[decoder].lstm;
        let (w, b) = (tape.param(w), tape.param(b));
        Ok(tape.lstm(w, b, input, state.0, state.1)?)
    }

    fn head(&self, tape: &mut Tape, ids: (ParamId, ParamId), h: Var, t_emb: Var) -> Result<Var, ModelError> {
        let joint = tape.concat(&[h, t_emb])?;
        let (w, b) = (tape.param(ids.0), tape.param(ids.1));
        let logits = tape.affine(w, joint, Some(b))?;
        Ok(tape.softmax(logits)?)
    }

    /// `softmax(g_2([h_t, t]))` as `(non-stop, stop)`.
    pub fn stop_indicator(&self, tape: &mut Tape, h: Var, t_emb: Var) -> Result<Var, ModelError> {
        let ids = self.stop_head.ok_or_else(|| ModelError::Config("one-branch model has no stop head".into()))?;
        self.head(tape, ids, h, t_emb)
    }

    /// `softmax(g_1([h_t, t]))` over the direction classes.
    pub fn direction_decider(&self, tape: &mut Tape, h: Var, t_emb: Var) -> Result<Var, ModelError> {
        self.head(tape, self.direction_head, h, t_emb)
    }

    /// Encodes the instruction and zeroes every decoder state.
    pub fn start(&self, tape: &mut Tape, instruction: &Instruction) -> Result<AgentState, ModelError> {
        let mut text = Vec::new();
        for e in 0..self.encoders.len() {
            let x = self.encode_text(tape, e, &instruction.tokens)?;
            let xt = tape.transpose(x)?;
            text.push((x, xt));
        }
        let th = self.config.trajectory_hidden;
        let hidden = (0..self.decoders.len())
            .map(|_| (tape.input(Array::zeros(&[th])), tape.input(Array::zeros(&[th]))))
            .collect();
        Ok(AgentState { text, hidden, prev_action: START_ACTION, t: 0 })
    }

    /// Advances every decoder by one step on `obs` and evaluates the heads.
    pub fn step(&self, tape: &mut Tape, state: &mut AgentState, obs: &Observation) -> Result<StepVars, ModelError> {
        let visual: Vec<Var> =
            (0..self.encoders.len()).map(|e| self.encode_visual(tape, e, obs)).collect::<Result<_, _>>()?;
        let mut outputs = Vec::with_capacity(self.decoders.len());
        for (d, dec) in self.decoders.iter().enumerate() {
            let h_prev = state.hidden[d].0;
            let mut parts = Vec::with_capacity(2 * dec.reads.len() + 1);
            for (k, &e) in dec.reads.iter().enumerate() {
                let (x, xt) = state.text[e];
                parts.push(self.attend(tape, dec.attn[k], h_prev, x, xt)?.0);
            }
            parts.extend(dec.reads.iter().map(|&e| visual[e]));
            let table = tape.param(dec.action);
            parts.push(tape.row(table, state.prev_action)?);
            let input = tape.concat(&parts)?;
            state.hidden[d] = self.trajectory_step(tape, d, input, state.hidden[d])?;
            let t_emb = self.time_embedding(tape, d, state.t)?;
            outputs.push((state.hidden[d].0, t_emb));
        }
        let (dd, sd) = self.config.variant.head_decoders();
        let direction = self.direction_decider(tape, outputs[dd].0, outputs[dd].1)?;
        let stop = match self.stop_head {
            Some(_) => Some(self.stop_indicator(tape, outputs[sd].0, outputs[sd].1)?),
            None => None,
        };
        Ok(StepVars { stop, direction })
    }

    /// Records the action taken after a step; the next step embeds it.
    pub fn advance(&self, state: &mut AgentState, action: Action) {
        state.prev_action = action.index();
        state.t += 1;
    }

    /// Parameter ids owned by exactly one branch: `(direction-only, stop-only)`.
    pub fn branch_exclusive_params(&self) -> (Vec<ParamId>, Vec<ParamId>) {
        let (dd, sd) = self.config.variant.head_decoders();
        let mut dir = vec![self.direction_head.0, self.direction_head.1];
        let mut stop: Vec<ParamId> = self.stop_head.map(|(w, b)| vec![w, b]).unwrap_or_default();
        if dd != sd {
            let names = |d: usize| {
                self.params.names().filter(move |n| n.starts_with(&format!("dec{d}."))).map(str::to_string)
            };
            dir.extend(names(dd).filter_map(|n| self.params.id(&n)));
            stop.extend(names(sd).filter_map(|n| self.params.id(&n)));
            if self.encoders.len() == 2 {
                let enc = |e: usize| {
                    self.params.names().filter(move |n| n.starts_with(&format!("enc{e}."))).map(str::to_string)
                };
                dir.extend(enc(0).filter_map(|n| self.params.id(&n)));
                stop.extend(enc(1).filter_map(|n| self.params.id(&n)));
            }
        }
        (dir, stop)
    }
}
