use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    /// One predictor/joiner pair producing punctuated output.
    PunctuatedOnly,
    /// Separate predictor/joiner pairs for normalized and punctuated output
    /// over a shared encoder.
    TwoDecoder,
    /// One predictor/joiner pair whose predictor input carries a mode
    /// embedding.
    ConditionedPredictor,
}

impl std::str::FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "punct-only" | "punctuated-only" => Ok(Self::PunctuatedOnly),
            "2dec" | "two-decoder" => Ok(Self::TwoDecoder),
            "cond" | "conditioned-predictor" => Ok(Self::ConditionedPredictor),
            other => Err(Error::Config(format!("unknown architecture `{other}`"))),
        }
    }
}

/// Requested output type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeId {
    Normalized,
    Punctuated,
}

impl ModeId {
    pub fn index(self) -> usize {
        match self {
            ModeId::Normalized => 0,
            ModeId::Punctuated => 1,
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            ModeId::Normalized => "norm",
            ModeId::Punctuated => "punct",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub architecture: Architecture,
    pub vocab_size: usize,
    pub blank_index: usize,
    /// Acoustic feature dimension of the input frames.
    pub feature_dim: usize,
    pub encoder_hidden: usize,
    /// Number of input frames (current and past) seen by each encoder step.
    pub encoder_kernel: usize,
    pub encoder_downsample: usize,
    pub token_embed_dim: usize,
    pub mode_embed_dim: usize,
    /// Number of previous tokens the stateless predictor looks at.
    pub predictor_context: usize,
    pub predictor_hidden: usize,
    pub joiner_hidden: usize,
    /// Two-decoder models only: let both decoders use one token embedding.
    pub share_token_embedding: bool,
    pub max_symbols_per_frame: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            architecture: Architecture::ConditionedPredictor,
            vocab_size: 500,
            blank_index: 0,
            feature_dim: 80,
            encoder_hidden: 256,
            encoder_kernel: 3,
            encoder_downsample: 2,
            token_embed_dim: 500,
            mode_embed_dim: 12,
            predictor_context: 2,
            predictor_hidden: 256,
            joiner_hidden: 256,
            share_token_embedding: false,
            max_symbols_per_frame: 10,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("vocab_size", self.vocab_size),
            ("feature_dim", self.feature_dim),
            ("encoder_hidden", self.encoder_hidden),
            ("encoder_kernel", self.encoder_kernel),
            ("encoder_downsample", self.encoder_downsample),
            ("token_embed_dim", self.token_embed_dim),
            ("mode_embed_dim", self.mode_embed_dim),
            ("predictor_context", self.predictor_context),
            ("predictor_hidden", self.predictor_hidden),
            ("joiner_hidden", self.joiner_hidden),
            ("max_symbols_per_frame", self.max_symbols_per_frame),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be at least 1")));
        }
        if self.blank_index >= self.vocab_size {
            return Err(Error::Config(format!(
                "blank index {} outside vocabulary of {}",
                self.blank_index, self.vocab_size
            )));
        }
        if self.architecture == Architecture::ConditionedPredictor && self.predictor_hidden < self.mode_embed_dim {
            return Err(Error::Config(format!(
                "predictor_hidden ({}) must be at least mode_embed_dim ({}) so modes stay separable",
                self.predictor_hidden, self.mode_embed_dim
            )));
        }
        Ok(())
    }

    pub fn is_conditioned(&self) -> bool {
        self.architecture == Architecture::ConditionedPredictor
    }

    pub fn decoder_count(&self) -> usize {
        match self.architecture {
            Architecture::TwoDecoder => 2,
            _ => 1,
        }
    }

    /// Width of one history slot fed to the predictor layer.
    pub fn slot_dim(&self) -> usize {
        self.token_embed_dim + if self.is_conditioned() { self.mode_embed_dim } else { 0 }
    }

    /// Number of encoder frames produced for `frames` input frames.
    pub fn encoder_frames(&self, frames: usize) -> usize {
        frames.div_ceil(self.encoder_downsample)
    }
}

/// Weight of the punctuated term in the conditioned objective; the
/// normalized term gets `1 - alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    alpha: f64,
}

impl LossWeights {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidArgument(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { alpha: 0.5 }
    }
}
