//! The three training objectives: punctuated-only, the summed two-decoder
//! loss, and the alpha-weighted conditioned-predictor loss on partially
//! punctuated batches.

use super::config::{Architecture, LossWeights, ModeId};
use super::loss::forward_backward;
use super::model::{FeatureSequence, LabelSequence, Params, TransducerModel};
use crate::{Error, Result};

/// One transducer loss evaluated for an utterance.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Term<'a> {
    pub mode: Option<ModeId>,
    pub target: &'a [usize],
    /// Gradient weight; zero skips backpropagation for the term.
    pub weight: f64,
}

/// Evaluates every term on one utterance with a single encoder pass.
/// Returns the unweighted per-term losses and, when `grad` is given,
/// accumulates `sum(weight * d loss)` into it.
pub(crate) fn evaluate(
    model: &TransducerModel,
    x: &FeatureSequence,
    terms: &[Term<'_>],
    mut grad: Option<&mut Params>,
) -> Result<Vec<f64>> {
    let cache = model.encode_cached(x)?;
    let enc = &cache.states;
    let mut d_enc = vec![0.0; enc.data.len()];
    let mut touched = false;
    let mut losses = Vec::with_capacity(terms.len());
    for term in terms {
        let (decoder, cond) = model.route(term.mode)?;
        let pass = model.decoder_pass(enc, decoder, cond, term.target)?;
        let (loss, g) = forward_backward(&pass.lattice, term.target);
        losses.push(loss);
        if let Some(grad) = grad.as_deref_mut() {
            if term.weight != 0.0 {
                model.decoder_backward(enc, &pass, &g, term.weight, grad, &mut d_enc);
                touched = true;
            }
        }
    }
    if let (Some(grad), true) = (grad, touched) {
        model.encoder_backward(&cache, &d_enc, grad);
    }
    Ok(losses)
}

/// An utterance for the conditioned objective; `y_p` may be missing.
#[derive(Clone, Copy, Debug)]
pub struct ConditionedSample<'a> {
    pub features: &'a FeatureSequence,
    pub y_n: &'a LabelSequence,
    pub y_p: Option<&'a LabelSequence>,
}

fn require(model: &TransducerModel, arch: Architecture) -> Result<()> {
    if model.config.architecture != arch {
        return Err(Error::Architecture(format!(
            "expected a {arch:?} model, got {:?}",
            model.config.architecture
        )));
    }
    Ok(())
}

fn require_mode(label: &LabelSequence, mode: ModeId) -> Result<()> {
    if label.mode != mode {
        return Err(Error::Mode(format!("expected a {mode:?} reference, got {:?}", label.mode)));
    }
    Ok(())
}

impl TransducerModel {
    /// Transducer loss of the punctuated reference.
    pub fn loss_punctuated_only(&self, x: &FeatureSequence, y_p: &LabelSequence) -> Result<f64> {
        Ok(self.loss_punctuated_only_impl(x, y_p, None)?)
    }

    pub fn loss_punctuated_only_with_grad(&self, x: &FeatureSequence, y_p: &LabelSequence) -> Result<(f64, Params)> {
        let mut grad = self.params.zeros_like();
        let loss = self.loss_punctuated_only_impl(x, y_p, Some(&mut grad))?;
        Ok((loss, grad))
    }

    fn loss_punctuated_only_impl(&self, x: &FeatureSequence, y_p: &LabelSequence, grad: Option<&mut Params>) -> Result<f64> {
        require(self, Architecture::PunctuatedOnly)?;
        require_mode(y_p, ModeId::Punctuated)?;
        let terms = [Term {
            mode: None,
            target: &y_p.tokens,
            weight: 1.0,
        }];
        Ok(evaluate(self, x, &terms, grad)?[0])
    }

    /// `L^N + L^P` over the shared encoder, each from its own decoder.
    pub fn loss_2decoder(&self, x: &FeatureSequence, y_n: &LabelSequence, y_p: &LabelSequence) -> Result<f64> {
        let (n, p) = self.loss_2decoder_parts(x, y_n, y_p, true, None)?;
        Ok(n + p)
    }

    /// Loss and gradient. With `include_punctuated` false the punctuated
    /// term is still reported but contributes no gradient.
    pub fn loss_2decoder_with_grad(
        &self,
        x: &FeatureSequence,
        y_n: &LabelSequence,
        y_p: &LabelSequence,
        include_punctuated: bool,
    ) -> Result<(f64, Params)> {
        let mut grad = self.params.zeros_like();
        let (n, p) = self.loss_2decoder_parts(x, y_n, y_p, include_punctuated, Some(&mut grad))?;
        Ok((n + p, grad))
    }

    /// The normalized and punctuated terms separately.
    pub fn loss_2decoder_parts(
        &self,
        x: &FeatureSequence,
        y_n: &LabelSequence,
        y_p: &LabelSequence,
        include_punctuated: bool,
        grad: Option<&mut Params>,
    ) -> Result<(f64, f64)> {
        require(self, Architecture::TwoDecoder)?;
        require_mode(y_n, ModeId::Normalized)?;
        require_mode(y_p, ModeId::Punctuated)?;
        let terms = [
            Term {
                mode: Some(ModeId::Normalized),
                target: &y_n.tokens,
                weight: 1.0,
            },
            Term {
                mode: Some(ModeId::Punctuated),
                target: &y_p.tokens,
                weight: if include_punctuated { 1.0 } else { 0.0 },
            },
        ];
        let l = evaluate(self, x, &terms, grad)?;
        Ok((l[0], l[1]))
    }

    /// Per-sample normalized and punctuated losses of a conditioned model.
    pub fn conditioned_losses(&self, batch: &[ConditionedSample<'_>]) -> Result<Vec<(f64, Option<f64>)>> {
        self.conditioned_pass(batch, LossWeights::default(), None)
    }

    /// `(1 - alpha) * mean L^N + alpha * mean L^P`, where the punctuated mean
    /// runs over the samples that have a punctuated reference and is zero if
    /// none does.
    pub fn loss_conditioned(&self, batch: &[ConditionedSample<'_>], w: LossWeights) -> Result<f64> {
        let per_sample = self.conditioned_pass(batch, w, None)?;
        Ok(combine_conditioned(&per_sample, w))
    }

    pub fn loss_conditioned_with_grad(&self, batch: &[ConditionedSample<'_>], w: LossWeights) -> Result<(f64, Params)> {
        let mut grad = self.params.zeros_like();
        let per_sample = self.conditioned_pass(batch, w, Some(&mut grad))?;
        Ok((combine_conditioned(&per_sample, w), grad))
    }

    /// `mean L^N + mean L^P` on a fully punctuated batch, i.e. the
    /// two-decoder objective evaluated with the single conditioned decoder.
    pub fn conditioned_joint_loss(&self, batch: &[ConditionedSample<'_>]) -> Result<f64> {
        if batch.iter().any(|s| s.y_p.is_none()) {
            return Err(Error::InvalidArgument("every sample needs a punctuated reference".into()));
        }
        let per_sample = self.conditioned_pass(batch, LossWeights::default(), None)?;
        let (mean_n, mean_p) = conditioned_means(&per_sample);
        Ok(mean_n + mean_p.unwrap_or(0.0))
    }

    fn conditioned_pass(
        &self,
        batch: &[ConditionedSample<'_>],
        w: LossWeights,
        mut grad: Option<&mut Params>,
    ) -> Result<Vec<(f64, Option<f64>)>> {
        require(self, Architecture::ConditionedPredictor)?;
        if batch.is_empty() {
            return Err(Error::InvalidArgument("empty batch".into()));
        }
        let (weight_n, weight_p) = conditioned_term_weights(batch.len(), batch.iter().filter(|s| s.y_p.is_some()).count(), w);
        batch
            .iter()
            .map(|s| {
                let terms = conditioned_terms(s, weight_n, weight_p)?;
                let l = evaluate(self, s.features, &terms, grad.as_deref_mut())?;
                Ok((l[0], l.get(1).copied()))
            })
            .collect()
    }
}

pub(crate) fn conditioned_term_weights(batch: usize, punctuated: usize, w: LossWeights) -> (f64, f64) {
    let weight_n = (1.0 - w.alpha()) / batch as f64;
    let weight_p = if punctuated > 0 { w.alpha() / punctuated as f64 } else { 0.0 };
    (weight_n, weight_p)
}

pub(crate) fn conditioned_terms<'a>(s: &ConditionedSample<'a>, weight_n: f64, weight_p: f64) -> Result<Vec<Term<'a>>> {
    require_mode(s.y_n, ModeId::Normalized)?;
    let mut terms = vec![Term {
        mode: Some(ModeId::Normalized),
        target: &s.y_n.tokens,
        weight: weight_n,
    }];
    if let Some(y_p) = s.y_p {
        require_mode(y_p, ModeId::Punctuated)?;
        terms.push(Term {
            mode: Some(ModeId::Punctuated),
            target: &y_p.tokens,
            weight: weight_p,
        });
    }
    Ok(terms)
}

fn conditioned_means(per_sample: &[(f64, Option<f64>)]) -> (f64, Option<f64>) {
    let mean_n = per_sample.iter().map(|s| s.0).sum::<f64>() / per_sample.len() as f64;
    let punct: Vec<f64> = per_sample.iter().filter_map(|s| s.1).collect();
    let mean_p = (!punct.is_empty()).then(|| punct.iter().sum::<f64>() / punct.len() as f64);
    (mean_n, mean_p)
}

/// Combines per-sample losses with the conditioned weighting.
pub fn combine_conditioned(per_sample: &[(f64, Option<f64>)], w: LossWeights) -> f64 {
    let (mean_n, mean_p) = conditioned_means(per_sample);
    let alpha = w.alpha();
    match mean_p {
        Some(p) => (1.0 - alpha) * mean_n + alpha * p,
        None => (1.0 - alpha) * mean_n,
    }
}
