//! Mini-batch gradient descent for all three architectures.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Architecture, LossWeights, ModeId};
use super::model::{FeatureSequence, LabelSequence, Params, TransducerModel};
use super::objective::{conditioned_term_weights, conditioned_terms, evaluate, ConditionedSample, Term};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Heavy-ball momentum; 0 gives plain SGD.
    pub momentum: f64,
    pub seed: u64,
    pub weights: LossWeights,
    /// L2 penalty coefficient added to the gradient as `weight_decay * theta`.
    pub weight_decay: f64,
    /// Rescale the batch gradient to at most this global norm.
    pub clip_norm: Option<f64>,
    /// Worker threads for per-sample gradients. Results do not depend on it.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 8,
            learning_rate: 0.05,
            momentum: 0.9,
            seed: 0,
            weights: LossWeights::default(),
            weight_decay: 0.0,
            clip_norm: Some(5.0),
            threads: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be finite and non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config("momentum must lie in [0, 1)".into()));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Config("weight_decay must be finite and non-negative".into()));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return Err(Error::Config("clip_norm must be positive".into()));
            }
        }
        if self.threads == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub features: FeatureSequence,
    pub y_n: LabelSequence,
    pub y_p: Option<LabelSequence>,
}

/// Losses seen during one epoch, measured before each batch update.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// The training objective averaged over the epoch.
    pub loss: f64,
    pub loss_n: Option<f64>,
    pub loss_p: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: TransducerModel,
    pub log: Vec<EpochLog>,
}

fn check_compatibility(arch: Architecture, examples: &[TrainingExample]) -> Result<()> {
    if examples.is_empty() {
        return Err(Error::InvalidArgument("training corpus is empty".into()));
    }
    for (i, ex) in examples.iter().enumerate() {
        if ex.y_n.mode != ModeId::Normalized {
            return Err(Error::Mode(format!("example {i}: y_n is not a normalized reference")));
        }
        match &ex.y_p {
            Some(y) if y.mode != ModeId::Punctuated => {
                return Err(Error::Mode(format!("example {i}: y_p is not a punctuated reference")));
            }
            None if arch != Architecture::ConditionedPredictor => {
                return Err(Error::Architecture(format!(
                    "{arch:?} training needs a punctuated reference for every example (example {i} has none)"
                )));
            }
            _ => {}
        }
    }
    Ok(())
}

/// Splits `0..total` into `parts` contiguous counts that differ by at most one.
fn spread(total: usize, parts: usize, b: usize) -> usize {
    (b + 1) * total / parts - b * total / parts
}

/// Shuffled batches. For conditioned training every batch draws its share of
/// punctuated examples so that its punctuated fraction tracks the corpus.
pub(crate) fn make_batches(
    examples: &[TrainingExample],
    batch_size: usize,
    stratify: bool,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<usize>> {
    let n = examples.len();
    let count = n.div_ceil(batch_size);
    if !stratify {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        return order.chunks(batch_size).map(<[usize]>::to_vec).collect();
    }
    let (mut punct, mut plain): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| examples[i].y_p.is_some());
    punct.shuffle(rng);
    plain.shuffle(rng);
    let (mut pi, mut ni) = (0, 0);
    let mut batches = Vec::with_capacity(count);
    for b in 0..count {
        let take_p = spread(punct.len(), count, b);
        let take_n = spread(plain.len(), count, b);
        let mut batch: Vec<usize> = punct[pi..pi + take_p].iter().chain(&plain[ni..ni + take_n]).copied().collect();
        pi += take_p;
        ni += take_n;
        batch.shuffle(rng);
        batches.push(batch);
    }
    batches.shuffle(rng);
    batches
}

/// Term weights for one example so that the summed gradient over a batch is
/// the gradient of the batch objective.
fn batch_terms<'a>(
    arch: Architecture,
    ex: &'a TrainingExample,
    batch_len: usize,
    punctuated_in_batch: usize,
    w: LossWeights,
) -> Result<Vec<Term<'a>>> {
    let scale = 1.0 / batch_len as f64;
    Ok(match arch {
        Architecture::PunctuatedOnly => vec![Term {
            mode: None,
            target: &ex.y_p.as_ref().expect("checked").tokens,
            weight: scale,
        }],
        Architecture::TwoDecoder => vec![
            Term {
                mode: Some(ModeId::Normalized),
                target: &ex.y_n.tokens,
                weight: scale,
            },
            Term {
                mode: Some(ModeId::Punctuated),
                target: &ex.y_p.as_ref().expect("checked").tokens,
                weight: scale,
            },
        ],
        Architecture::ConditionedPredictor => {
            let (wn, wp) = conditioned_term_weights(batch_len, punctuated_in_batch, w);
            let sample = ConditionedSample {
                features: &ex.features,
                y_n: &ex.y_n,
                y_p: ex.y_p.as_ref(),
            };
            conditioned_terms(&sample, wn, wp)?
        }
    })
}

struct SampleResult {
    loss_n: Option<f64>,
    loss_p: Option<f64>,
    grad: Params,
}

fn sample_gradient(
    model: &TransducerModel,
    ex: &TrainingExample,
    batch_len: usize,
    punctuated_in_batch: usize,
    w: LossWeights,
) -> Result<SampleResult> {
    let arch = model.config.architecture;
    let terms = batch_terms(arch, ex, batch_len, punctuated_in_batch, w)?;
    let mut grad = model.params.zeros_like();
    let losses = evaluate(model, &ex.features, &terms, Some(&mut grad))?;
    let (loss_n, loss_p) = match arch {
        Architecture::PunctuatedOnly => (None, Some(losses[0])),
        _ => (Some(losses[0]), losses.get(1).copied()),
    };
    Ok(SampleResult { loss_n, loss_p, grad })
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn epoch_objective(arch: Architecture, w: LossWeights, loss_n: Option<f64>, loss_p: Option<f64>) -> f64 {
    match arch {
        Architecture::PunctuatedOnly => loss_p.unwrap_or(0.0),
        Architecture::TwoDecoder => loss_n.unwrap_or(0.0) + loss_p.unwrap_or(0.0),
        Architecture::ConditionedPredictor => {
            (1.0 - w.alpha()) * loss_n.unwrap_or(0.0) + w.alpha() * loss_p.unwrap_or(0.0)
        }
    }
}

fn diverged(epoch: usize, log: &[EpochLog]) -> Error {
    let last_finite = log.iter().rev().take(5).rev().map(|l| l.loss).collect();
    Error::Divergence { epoch, last_finite }
}

/// Trains `model` on `examples`. See [`train_with`] for a per-epoch callback.
pub fn train(model: TransducerModel, examples: &[TrainingExample], cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with(model, examples, cfg, |_| {})
}

/// Like [`train`], calling `on_epoch` after each epoch.
pub fn train_with(
    mut model: TransducerModel,
    examples: &[TrainingExample],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let arch = model.config.architecture;
    check_compatibility(arch, examples)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut velocity = model.params.zeros_like();
    let mut log: Vec<EpochLog> = Vec::with_capacity(cfg.epochs);
    let stratify = arch == Architecture::ConditionedPredictor;

    for epoch in 1..=cfg.epochs {
        let batches = make_batches(examples, cfg.batch_size, stratify, &mut rng);
        let mut losses_n = vec![None; examples.len()];
        let mut losses_p = vec![None; examples.len()];
        for batch in &batches {
            let punctuated = batch.iter().filter(|&&i| examples[i].y_p.is_some()).count();
            let run = |&i: &usize| sample_gradient(&model, &examples[i], batch.len(), punctuated, cfg.weights);
            let results: Vec<SampleResult> = if cfg.threads > 1 {
                pool.install(|| batch.par_iter().map(run).collect::<Result<_>>())?
            } else {
                batch.iter().map(run).collect::<Result<_>>()?
            };
            let mut grad = model.params.zeros_like();
            for (&i, r) in batch.iter().zip(&results) {
                grad.add_scaled(&r.grad, 1.0);
                losses_n[i] = r.loss_n;
                losses_p[i] = r.loss_p;
            }
            if !grad.is_finite() {
                return Err(diverged(epoch, &log));
            }
            if cfg.weight_decay > 0.0 {
                grad.add_scaled(&model.params, cfg.weight_decay);
            }
            if let Some(limit) = cfg.clip_norm {
                let norm = grad.norm();
                if norm > limit {
                    grad.scale(limit / norm);
                }
            }
            velocity.scale(cfg.momentum);
            velocity.add_scaled(&grad, 1.0);
            model.params.add_scaled(&velocity, -cfg.learning_rate);
        }
        let loss_n = mean(&losses_n.iter().flatten().copied().collect::<Vec<_>>());
        let loss_p = mean(&losses_p.iter().flatten().copied().collect::<Vec<_>>());
        let entry = EpochLog {
            epoch,
            loss: epoch_objective(arch, cfg.weights, loss_n, loss_p),
            loss_n,
            loss_p,
        };
        if !entry.loss.is_finite() || !model.params.is_finite() {
            return Err(diverged(epoch, &log));
        }
        on_epoch(&entry);
        log.push(entry);
    }
    Ok(TrainOutcome { model, log })
}
