//! Synthetic toy corpus: short template sentences with capitalized starts,
//! proper nouns, commas and terminal marks, paired with noisy one-hot
//! character features.

use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Corpus, FeatureRef, Sample, YpSource};
use crate::text::{detokenize, normalize, PunctuationConfig, Token, Transcript};
use crate::transducer::{CharVocab, FeatureSequence};
use crate::{Error, Result};

const NAMES: [&str; 4] = ["Anna", "Tom", "Rome", "Max"];
const NOUNS: [&str; 5] = ["cat", "dog", "bird", "car", "sun"];
const VERBS: [&str; 5] = ["saw", "met", "likes", "sees", "has"];
const DETERMINERS: [&str; 2] = ["the", "a"];
const ADVERBS: [&str; 4] = ["now", "today", "again", "too"];
const TERMINALS: [char; 3] = ['.', '?', '!'];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_samples: usize,
    pub min_words: usize,
    pub max_words: usize,
    /// Standard deviation of the Gaussian noise added to each feature.
    pub noise: f64,
    pub frames_per_char: usize,
    /// Nominal audio duration of one feature frame.
    pub frame_seconds: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_samples: 200,
            min_words: 2,
            max_words: 4,
            noise: 0.1,
            frames_per_char: 2,
            frame_seconds: 0.02,
        }
    }
}

impl SynthConfig {
    fn word_range(&self) -> Result<RangeInclusive<usize>> {
        if self.min_words < 2 || self.min_words > self.max_words {
            return Err(Error::Config(format!(
                "word range {}..={} must satisfy 2 <= min <= max",
                self.min_words, self.max_words
            )));
        }
        Ok(self.min_words..=self.max_words)
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, list: &[&'a str]) -> &'a str {
    list[rng.random_range(0..list.len())]
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// A noun phrase of one or two words.
fn noun_phrase(rng: &mut ChaCha8Rng, room: usize) -> Vec<String> {
    if room >= 2 && rng.random_bool(0.5) {
        vec![pick(rng, &DETERMINERS).into(), pick(rng, &NOUNS).into()]
    } else {
        vec![pick(rng, &NAMES).into()]
    }
}

/// Subject, verb, optional object and adverbs, filling exactly `words` words.
fn sentence(rng: &mut ChaCha8Rng, words: usize) -> Vec<Token> {
    let mut out: Vec<String> = noun_phrase(rng, words - 1);
    out.push(pick(rng, &VERBS).into());
    if out.len() < words {
        out.extend(noun_phrase(rng, words - out.len()));
    }
    let mut comma_after = None;
    while out.len() < words {
        if comma_after.is_none() && rng.random_bool(0.5) {
            comma_after = Some(out.len() - 1);
        }
        out.push(pick(rng, &ADVERBS).into());
    }
    out[0] = capitalize(&out[0]);
    let mut tokens = Vec::with_capacity(words + 2);
    for (i, w) in out.into_iter().enumerate() {
        tokens.push(Token::word(w));
        if comma_after == Some(i) {
            tokens.push(Token::punct(','));
        }
    }
    tokens.push(Token::punct(TERMINALS[rng.random_range(0..TERMINALS.len())]));
    tokens
}

/// One-hot character frames with additive Gaussian noise.
fn features(text: &str, vocab: &CharVocab, cfg: &SynthConfig, noise: &Normal<f64>, rng: &mut ChaCha8Rng) -> Result<FeatureSequence> {
    let ids = vocab.encode(text)?;
    let dim = vocab.len();
    let frames = ids.len() * cfg.frames_per_char;
    let mut data = Vec::with_capacity(frames * dim);
    for &id in &ids {
        for _ in 0..cfg.frames_per_char {
            for k in 0..dim {
                let hot = if k == id { 1.0 } else { 0.0 };
                data.push(hot + noise.sample(rng));
            }
        }
    }
    FeatureSequence::from_flat(frames, dim, data)
}

/// Generates a fully punctuated corpus. The features have one dimension per
/// symbol of `CharVocab::from_punctuation(punct)`.
pub fn synth_toy_corpus(cfg: &SynthConfig, punct: &PunctuationConfig) -> Result<Corpus> {
    if cfg.n_samples == 0 {
        return Err(Error::Config("n_samples must be at least 1".into()));
    }
    if cfg.frames_per_char == 0 {
        return Err(Error::Config("frames_per_char must be at least 1".into()));
    }
    let words = cfg.word_range()?;
    if !(cfg.noise >= 0.0 && cfg.noise.is_finite()) {
        return Err(Error::Config("noise must be finite and non-negative".into()));
    }
    let noise = Normal::new(0.0, cfg.noise).map_err(|e| Error::Config(format!("noise: {e}")))?;
    let vocab = CharVocab::from_punctuation(punct);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut samples = Vec::with_capacity(cfg.n_samples);
    for i in 0..cfg.n_samples {
        let id = format!("toy-{i:05}");
        let n_words = rng.random_range(words.clone());
        let tokens = sentence(&mut rng, n_words);
        let text = detokenize(&tokens);
        let feats = features(&text, &vocab, cfg, &noise, &mut rng)?;
        let audio = feats.frames() as f64 * cfg.frame_seconds;
        let y_p = Transcript::new(id.clone(), tokens).with_audio_seconds(Some(audio));
        samples.push(Sample {
            utterance_id: id,
            features: Some(FeatureRef::Inline(feats)),
            y_n: normalize(&y_p),
            y_p: Some(y_p),
            y_p_source: YpSource::Original,
            original_y_p: None,
            audio_seconds: Some(audio),
        });
    }
    Corpus::new(samples)
}
