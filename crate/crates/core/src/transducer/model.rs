use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{Architecture, ModeId, ModelConfig};
use super::loss::LogitLattice;
use super::tensor::{log_softmax_in_place, matrix_rank, Linear, Tensor};
use crate::{Error, Result};

/// `L x A` acoustic frames, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct FeatureSequence {
    frames: usize,
    dim: usize,
    data: Vec<f64>,
}

impl FeatureSequence {
    pub fn from_flat(frames: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if frames == 0 || dim == 0 {
            return Err(Error::InvalidArgument("feature sequence needs at least one frame and one dimension".into()));
        }
        if data.len() != frames * dim {
            return Err(Error::DimensionMismatch {
                what: "feature values",
                expected: frames * dim,
                found: data.len(),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("feature values must be finite".into()));
        }
        Ok(Self { frames, dim, data })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                what: "feature row width",
                expected: dim,
                found: bad.len(),
            });
        }
        let frames = rows.len();
        Self::from_flat(frames, dim, rows.into_iter().flatten().collect())
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frame(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// The first `frames` frames.
    pub fn truncated(&self, frames: usize) -> Result<Self> {
        Self::from_flat(frames, self.dim, self.data[..frames.min(self.frames) * self.dim].to_vec())
    }
}

impl TryFrom<Vec<Vec<f64>>> for FeatureSequence {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<FeatureSequence> for Vec<Vec<f64>> {
    fn from(f: FeatureSequence) -> Self {
        f.data.chunks(f.dim).map(<[f64]>::to_vec).collect()
    }
}

/// Target or decoded token indices, tagged with the output mode they belong
/// to.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSequence {
    pub tokens: Vec<usize>,
    pub mode: ModeId,
}

impl LabelSequence {
    pub fn new(tokens: Vec<usize>, mode: ModeId) -> Self {
        Self { tokens, mode }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncoderParams {
    pub conv: Linear,
    pub proj: Linear,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JoinerParams {
    pub enc_proj: Linear,
    pub pred_proj: Linear,
    pub out: Linear,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecoderParams {
    /// `None` when the decoder borrows decoder 0's table.
    pub embedding: Option<Tensor>,
    pub predictor: Linear,
    pub joiner: JoinerParams,
}

/// All trainable tensors. Gradients use the same type.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub encoder: EncoderParams,
    /// `[2, mode_embed_dim]`, conditioned models only.
    pub mode_embedding: Option<Tensor>,
    pub decoders: Vec<DecoderParams>,
}

fn push_linear<'a>(prefix: &str, l: &'a Linear, out: &mut Vec<(String, &'a Tensor)>) {
    out.push((format!("{prefix}.weight"), &l.weight));
    out.push((format!("{prefix}.bias"), &l.bias));
}

fn push_linear_mut<'a>(prefix: &str, l: &'a mut Linear, out: &mut Vec<(String, &'a mut Tensor)>) {
    out.push((format!("{prefix}.weight"), &mut l.weight));
    out.push((format!("{prefix}.bias"), &mut l.bias));
}

impl Params {
    /// Named tensors in a fixed order.
    pub fn tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        push_linear("encoder.conv", &self.encoder.conv, &mut out);
        push_linear("encoder.proj", &self.encoder.proj, &mut out);
        if let Some(e) = &self.mode_embedding {
            out.push(("mode_embedding".to_string(), e));
        }
        for (i, d) in self.decoders.iter().enumerate() {
            if let Some(e) = &d.embedding {
                out.push((format!("decoders.{i}.embedding"), e));
            }
            push_linear(&format!("decoders.{i}.predictor"), &d.predictor, &mut out);
            push_linear(&format!("decoders.{i}.joiner.enc_proj"), &d.joiner.enc_proj, &mut out);
            push_linear(&format!("decoders.{i}.joiner.pred_proj"), &d.joiner.pred_proj, &mut out);
            push_linear(&format!("decoders.{i}.joiner.out"), &d.joiner.out, &mut out);
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let Params {
            encoder,
            mode_embedding,
            decoders,
        } = self;
        let mut out = Vec::new();
        push_linear_mut("encoder.conv", &mut encoder.conv, &mut out);
        push_linear_mut("encoder.proj", &mut encoder.proj, &mut out);
        if let Some(e) = mode_embedding {
            out.push(("mode_embedding".to_string(), e));
        }
        for (i, d) in decoders.iter_mut().enumerate() {
            if let Some(e) = &mut d.embedding {
                out.push((format!("decoders.{i}.embedding"), e));
            }
            push_linear_mut(&format!("decoders.{i}.predictor"), &mut d.predictor, &mut out);
            push_linear_mut(&format!("decoders.{i}.joiner.enc_proj"), &mut d.joiner.enc_proj, &mut out);
            push_linear_mut(&format!("decoders.{i}.joiner.pred_proj"), &mut d.joiner.pred_proj, &mut out);
            push_linear_mut(&format!("decoders.{i}.joiner.out"), &mut d.joiner.out, &mut out);
        }
        out
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.tensors_mut().into_iter().for_each(|(_, t)| t.fill(0.0));
        z
    }

    /// `self += scale * other`
    pub fn add_scaled(&mut self, other: &Params, scale: f64) {
        for ((_, a), (_, b)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.data.iter_mut().zip(&b.data) {
                *x += scale * y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for (_, t) in self.tensors_mut() {
            t.data.iter_mut().for_each(|x| *x *= factor);
        }
    }

    pub fn norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|(_, t)| t.data.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.data.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.is_finite())
    }

    fn embedding(&self, decoder: usize) -> &Tensor {
        self.decoders[decoder]
            .embedding
            .as_ref()
            .or(self.decoders[0].embedding.as_ref())
            .expect("decoder 0 owns an embedding")
    }

    fn embedding_mut(&mut self, decoder: usize) -> &mut Tensor {
        let slot = if self.decoders[decoder].embedding.is_some() { decoder } else { 0 };
        self.decoders[slot].embedding.as_mut().expect("decoder 0 owns an embedding")
    }
}

/// Encoder output: `frames x dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderStates {
    pub frames: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl EncoderStates {
    pub fn frame(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }
}

pub(crate) struct EncoderCache {
    pub conv_inputs: Vec<f64>,
    pub activations: Vec<f64>,
    pub states: EncoderStates,
}

/// Activations of one decoder over one target, kept for backprop.
pub(crate) struct DecoderPass {
    pub decoder: usize,
    pub mode: Option<ModeId>,
    pub histories: Vec<Vec<usize>>,
    pub pred_inputs: Vec<Vec<f64>>,
    pub pred_states: Vec<Vec<f64>>,
    pub hidden: Vec<f64>,
    pub lattice: LogitLattice,
}

/// A stateless transducer in one of the three supported layouts.
#[derive(Clone, Debug, PartialEq)]
pub struct TransducerModel {
    pub config: ModelConfig,
    pub params: Params,
}

impl TransducerModel {
    /// Seeded uniform initialization. Conditioned models additionally check
    /// that distinct mode embeddings map to distinct predictor inputs after
    /// the first layer.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = &config;
        let encoder = EncoderParams {
            conv: Linear::init(c.encoder_kernel * c.feature_dim, c.encoder_hidden, &mut rng),
            proj: Linear::init(c.encoder_hidden, c.encoder_hidden, &mut rng),
        };
        let mode_embedding = c
            .is_conditioned()
            .then(|| Tensor::uniform(&[2, c.mode_embed_dim], 1.0, &mut rng));
        let decoders = (0..c.decoder_count())
            .map(|i| DecoderParams {
                embedding: (i == 0 || !c.share_token_embedding)
                    .then(|| Tensor::uniform(&[c.vocab_size, c.token_embed_dim], 1.0, &mut rng)),
                predictor: Linear::init(c.predictor_context * c.slot_dim(), c.predictor_hidden, &mut rng),
                joiner: JoinerParams {
                    enc_proj: Linear::init(c.encoder_hidden, c.joiner_hidden, &mut rng),
                    pred_proj: Linear::init(c.predictor_hidden, c.joiner_hidden, &mut rng),
                    out: Linear::init(c.joiner_hidden, c.vocab_size, &mut rng),
                },
            })
            .collect();
        let model = Self {
            config,
            params: Params {
                encoder,
                mode_embedding,
                decoders,
            },
        };
        if model.config.is_conditioned() && !model.modes_separable() {
            return Err(Error::Config(
                "initial predictor layer does not separate the two mode embeddings".into(),
            ));
        }
        Ok(model)
    }

    /// Every parameter zero.
    pub fn zeroed(config: ModelConfig) -> Result<Self> {
        let mut m = Self::new(config, 0)?;
        m.params = m.params.zeros_like();
        Ok(m)
    }

    /// The summed mode block of the predictor layer has full column rank and
    /// the two mode rows differ, so the predictor input difference between
    /// modes cannot vanish.
    pub fn modes_separable(&self) -> bool {
        let c = &self.config;
        let Some(e2) = &self.params.mode_embedding else {
            return false;
        };
        if e2.row(0) == e2.row(1) {
            return false;
        }
        let slot = c.slot_dim();
        let w = &self.params.decoders[0].predictor.weight;
        let mut block = vec![0.0; c.predictor_hidden * c.mode_embed_dim];
        for r in 0..c.predictor_hidden {
            let row = w.row(r);
            for j in 0..c.predictor_context {
                for m in 0..c.mode_embed_dim {
                    block[r * c.mode_embed_dim + m] += row[j * slot + c.token_embed_dim + m];
                }
            }
        }
        matrix_rank(c.predictor_hidden, c.mode_embed_dim, &block, 1e-10) == c.mode_embed_dim
    }

    /// Which decoder serves `mode`, and the mode to condition on.
    pub fn route(&self, mode: Option<ModeId>) -> Result<(usize, Option<ModeId>)> {
        match (self.config.architecture, mode) {
            (Architecture::PunctuatedOnly, None | Some(ModeId::Punctuated)) => Ok((0, None)),
            (Architecture::PunctuatedOnly, Some(ModeId::Normalized)) => {
                Err(Error::Mode("punctuated-only model has no normalized output".into()))
            }
            (Architecture::TwoDecoder, Some(m)) => Ok((m.index(), None)),
            (Architecture::ConditionedPredictor, Some(m)) => Ok((0, Some(m))),
            (arch, None) => Err(Error::Mode(format!("{arch:?} model needs an output mode"))),
        }
    }

    fn check_features(&self, x: &FeatureSequence) -> Result<()> {
        if x.dim() != self.config.feature_dim {
            return Err(Error::DimensionMismatch {
                what: "feature dimension",
                expected: self.config.feature_dim,
                found: x.dim(),
            });
        }
        Ok(())
    }

    /// Causal, downsampled encoder. Step `t` sees input frames
    /// `t*d - kernel + 1 ..= t*d`, zero-padded before the start.
    pub fn encode(&self, x: &FeatureSequence) -> Result<EncoderStates> {
        Ok(self.encode_cached(x)?.states)
    }

    pub(crate) fn encode_cached(&self, x: &FeatureSequence) -> Result<EncoderCache> {
        self.check_features(x)?;
        let c = &self.config;
        let frames = c.encoder_frames(x.frames());
        let (a, h, k) = (c.feature_dim, c.encoder_hidden, c.encoder_kernel);
        let enc = &self.params.encoder;
        let mut conv_inputs = vec![0.0; frames * k * a];
        let mut activations = vec![0.0; frames * h];
        let mut data = vec![0.0; frames * h];
        for t in 0..frames {
            let input = &mut conv_inputs[t * k * a..(t + 1) * k * a];
            for j in 0..k {
                if let Some(src) = (t * c.encoder_downsample).checked_sub(j) {
                    input[j * a..(j + 1) * a].copy_from_slice(x.frame(src));
                }
            }
            let act = &mut activations[t * h..(t + 1) * h];
            enc.conv.forward_into(input, act);
            act.iter_mut().for_each(|v| *v = v.tanh());
            enc.proj.forward_into(act, &mut data[t * h..(t + 1) * h]);
        }
        Ok(EncoderCache {
            conv_inputs,
            activations,
            states: EncoderStates { frames, dim: h, data },
        })
    }

    pub(crate) fn encoder_backward(&self, cache: &EncoderCache, d_states: &[f64], grad: &mut Params) {
        let c = &self.config;
        let (h, width) = (c.encoder_hidden, c.encoder_kernel * c.feature_dim);
        let enc = &self.params.encoder;
        let mut d_act = vec![0.0; h];
        for t in 0..cache.states.frames {
            let dy = &d_states[t * h..(t + 1) * h];
            if dy.iter().all(|&g| g == 0.0) {
                continue;
            }
            let act = &cache.activations[t * h..(t + 1) * h];
            d_act.fill(0.0);
            enc.proj.backward(act, dy, &mut grad.encoder.proj, Some(&mut d_act));
            for (g, a) in d_act.iter_mut().zip(act) {
                *g *= 1.0 - a * a;
            }
            enc.conv
                .backward(&cache.conv_inputs[t * width..(t + 1) * width], &d_act, &mut grad.encoder.conv, None);
        }
    }

    /// The `predictor_context` most recent tokens, left-padded with blank.
    pub fn history_window(&self, history: &[usize]) -> Vec<usize> {
        let k = self.config.predictor_context;
        let mut window = vec![self.config.blank_index; k.saturating_sub(history.len())];
        window.extend_from_slice(&history[history.len().saturating_sub(k)..]);
        window
    }

    fn check_mode(&self, mode: Option<ModeId>) -> Result<()> {
        match (self.config.is_conditioned(), mode) {
            (true, None) => Err(Error::Mode("conditioned predictor needs a mode".into())),
            (false, Some(_)) => Err(Error::Mode("only a conditioned predictor takes a mode".into())),
            _ => Ok(()),
        }
    }

    fn predictor_input(&self, decoder: usize, window: &[usize], mode: Option<ModeId>) -> Vec<f64> {
        let c = &self.config;
        let table = self.params.embedding(decoder);
        let mut input = Vec::with_capacity(c.predictor_context * c.slot_dim());
        for &tok in window {
            input.extend_from_slice(table.row(tok));
            if let (Some(m), Some(e2)) = (mode, &self.params.mode_embedding) {
                input.extend_from_slice(e2.row(m.index()));
            }
        }
        input
    }

    fn predictor_state(&self, decoder: usize, input: &[f64]) -> Vec<f64> {
        let mut s = self.params.decoders[decoder].predictor.forward(input);
        s.iter_mut().for_each(|v| *v = v.tanh());
        s
    }

    /// Stateless prediction network: looks only at the last
    /// `predictor_context` tokens of `history` (and the mode, when
    /// conditioned).
    pub fn predict(&self, decoder: usize, history: &[usize], mode: Option<ModeId>) -> Result<Vec<f64>> {
        self.check_mode(mode)?;
        if decoder >= self.params.decoders.len() {
            return Err(Error::Architecture(format!("model has no decoder {decoder}")));
        }
        if let Some(&bad) = history.iter().find(|&&t| t >= self.config.vocab_size) {
            return Err(Error::InvalidArgument(format!("token {bad} outside vocabulary")));
        }
        let window = self.history_window(history);
        Ok(self.predictor_state(decoder, &self.predictor_input(decoder, &window, mode)))
    }

    /// Log-distribution over the vocabulary for one encoder state and one
    /// predictor state.
    pub fn join(&self, decoder: usize, enc_state: &[f64], pred_state: &[f64]) -> Result<Vec<f64>> {
        let c = &self.config;
        if enc_state.len() != c.encoder_hidden {
            return Err(Error::DimensionMismatch {
                what: "encoder state",
                expected: c.encoder_hidden,
                found: enc_state.len(),
            });
        }
        if pred_state.len() != c.predictor_hidden {
            return Err(Error::DimensionMismatch {
                what: "predictor state",
                expected: c.predictor_hidden,
                found: pred_state.len(),
            });
        }
        let j = &self.params.decoders[decoder].joiner;
        let e = j.enc_proj.forward(enc_state);
        let p = j.pred_proj.forward(pred_state);
        Ok(self.join_projected(decoder, &e, &p).1)
    }

    /// Returns the joiner hidden layer and the log-probabilities.
    pub(crate) fn join_projected(&self, decoder: usize, enc_proj: &[f64], pred_proj: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let hidden: Vec<f64> = enc_proj.iter().zip(pred_proj).map(|(a, b)| (a + b).tanh()).collect();
        let mut logits = self.params.decoders[decoder].joiner.out.forward(&hidden);
        log_softmax_in_place(&mut logits);
        (hidden, logits)
    }

    /// Full lattice for one target on one decoder.
    pub(crate) fn decoder_pass(
        &self,
        enc: &EncoderStates,
        decoder: usize,
        mode: Option<ModeId>,
        target: &[usize],
    ) -> Result<DecoderPass> {
        self.check_mode(mode)?;
        let c = &self.config;
        if let Some(&bad) = target.iter().find(|&&y| y >= c.vocab_size || y == c.blank_index) {
            return Err(Error::InvalidArgument(format!("target token {bad} is blank or outside vocabulary")));
        }
        let rows = target.len() + 1;
        let joiner = &self.params.decoders[decoder].joiner;
        let histories: Vec<Vec<usize>> = (0..rows).map(|u| self.history_window(&target[..u])).collect();
        let pred_inputs: Vec<Vec<f64>> = histories
            .iter()
            .map(|w| self.predictor_input(decoder, w, mode))
            .collect();
        let pred_states: Vec<Vec<f64>> = pred_inputs.iter().map(|i| self.predictor_state(decoder, i)).collect();
        let enc_proj: Vec<Vec<f64>> = (0..enc.frames).map(|t| joiner.enc_proj.forward(enc.frame(t))).collect();
        let pred_proj: Vec<Vec<f64>> = pred_states.iter().map(|s| joiner.pred_proj.forward(s)).collect();

        let (jh, v) = (c.joiner_hidden, c.vocab_size);
        let cells = enc.frames * rows;
        let mut hidden = vec![0.0; cells * jh];
        let mut values = vec![0.0; cells * v];
        for t in 0..enc.frames {
            for u in 0..rows {
                let cell = t * rows + u;
                let h = &mut hidden[cell * jh..(cell + 1) * jh];
                for ((hv, a), b) in h.iter_mut().zip(&enc_proj[t]).zip(&pred_proj[u]) {
                    *hv = (a + b).tanh();
                }
                let out = &mut values[cell * v..(cell + 1) * v];
                joiner.out.forward_into(h, out);
                log_softmax_in_place(out);
            }
        }
        let lattice = LogitLattice::new(enc.frames, target.len(), v, c.blank_index, values)?;
        Ok(DecoderPass {
            decoder,
            mode,
            histories,
            pred_inputs,
            pred_states,
            hidden,
            lattice,
        })
    }

    /// Backpropagates `scale * d loss / d lattice` through one decoder pass,
    /// accumulating into `grad` and `d_enc`.
    pub(crate) fn decoder_backward(
        &self,
        enc: &EncoderStates,
        pass: &DecoderPass,
        grad_lattice: &[f64],
        scale: f64,
        grad: &mut Params,
        d_enc: &mut [f64],
    ) {
        let c = &self.config;
        let (jh, v, ph) = (c.joiner_hidden, c.vocab_size, c.predictor_hidden);
        let rows = pass.lattice.target_len + 1;
        let d = pass.decoder;
        let params = &self.params.decoders[d];
        let mut d_enc_proj = vec![0.0; enc.frames * jh];
        let mut d_pred_proj = vec![0.0; rows * jh];
        let mut g_logits = vec![0.0; v];
        let mut d_hidden = vec![0.0; jh];
        {
            let out_grad = &mut grad.decoders[d].joiner.out;
            for t in 0..enc.frames {
                for u in 0..rows {
                    let cell = t * rows + u;
                    let g = &grad_lattice[cell * v..(cell + 1) * v];
                    let total: f64 = g.iter().sum();
                    if total == 0.0 {
                        continue;
                    }
                    let lp = &pass.lattice.values[cell * v..(cell + 1) * v];
                    for ((gl, gi), l) in g_logits.iter_mut().zip(g).zip(lp) {
                        *gl = scale * (gi - l.exp() * total);
                    }
                    let h = &pass.hidden[cell * jh..(cell + 1) * jh];
                    d_hidden.fill(0.0);
                    params.joiner.out.backward(h, &g_logits, out_grad, Some(&mut d_hidden));
                    for k in 0..jh {
                        let dp = d_hidden[k] * (1.0 - h[k] * h[k]);
                        d_enc_proj[t * jh + k] += dp;
                        d_pred_proj[u * jh + k] += dp;
                    }
                }
            }
        }
        let h_enc = c.encoder_hidden;
        for t in 0..enc.frames {
            params.joiner.enc_proj.backward(
                enc.frame(t),
                &d_enc_proj[t * jh..(t + 1) * jh],
                &mut grad.decoders[d].joiner.enc_proj,
                Some(&mut d_enc[t * h_enc..(t + 1) * h_enc]),
            );
        }
        let slot = c.slot_dim();
        let mut d_state = vec![0.0; ph];
        let mut d_input = vec![0.0; c.predictor_context * slot];
        for u in 0..rows {
            d_state.fill(0.0);
            params.joiner.pred_proj.backward(
                &pass.pred_states[u],
                &d_pred_proj[u * jh..(u + 1) * jh],
                &mut grad.decoders[d].joiner.pred_proj,
                Some(&mut d_state),
            );
            for (g, s) in d_state.iter_mut().zip(&pass.pred_states[u]) {
                *g *= 1.0 - s * s;
            }
            d_input.fill(0.0);
            params
                .predictor
                .backward(&pass.pred_inputs[u], &d_state, &mut grad.decoders[d].predictor, Some(&mut d_input));
            for (j, &tok) in pass.histories[u].iter().enumerate() {
                let slot_grad = &d_input[j * slot..(j + 1) * slot];
                let row = grad.embedding_mut(d).row_mut(tok);
                for (r, g) in row.iter_mut().zip(&slot_grad[..c.token_embed_dim]) {
                    *r += g;
                }
                if let (Some(m), Some(e2)) = (pass.mode, grad.mode_embedding.as_mut()) {
                    for (r, g) in e2.row_mut(m.index()).iter_mut().zip(&slot_grad[c.token_embed_dim..]) {
                        *r += g;
                    }
                }
            }
        }
    }

    /// Lattice of log-probabilities for `target` under `mode`.
    pub fn lattice(&self, x: &FeatureSequence, mode: Option<ModeId>, target: &[usize]) -> Result<LogitLattice> {
        let (decoder, cond) = self.route(mode)?;
        let enc = self.encode(x)?;
        Ok(self.decoder_pass(&enc, decoder, cond, target)?.lattice)
    }
}
