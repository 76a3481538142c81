//! Frame-synchronous greedy decoding.

use super::config::ModeId;
use super::model::{FeatureSequence, LabelSequence, TransducerModel};
use crate::Result;

/// Index of the largest score; ties go to the lowest index.
fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Greedy transducer search over `frames` encoder frames. `score(t, history)`
/// returns the output log-distribution at frame `t` after emitting
/// `history`. At each frame the argmax symbol is emitted until blank wins or
/// `max_symbols` symbols have been emitted, then the search advances.
pub fn greedy_search<F>(frames: usize, max_symbols: usize, blank: usize, mut score: F) -> Result<Vec<usize>>
where
    F: FnMut(usize, &[usize]) -> Result<Vec<f64>>,
{
    let mut history = Vec::new();
    for t in 0..frames {
        for _ in 0..max_symbols {
            let best = argmax(&score(t, &history)?);
            if best == blank {
                break;
            }
            history.push(best);
        }
    }
    Ok(history)
}

impl TransducerModel {
    /// Greedy decoding in the requested output mode. Mode rules follow
    /// [`TransducerModel::route`].
    pub fn greedy_decode(&self, x: &FeatureSequence, mode: Option<ModeId>) -> Result<LabelSequence> {
        let (decoder, cond) = self.route(mode)?;
        let enc = self.encode(x)?;
        let joiner = &self.params.decoders[decoder].joiner;
        let enc_proj: Vec<Vec<f64>> = (0..enc.frames).map(|t| joiner.enc_proj.forward(enc.frame(t))).collect();
        let mut cached: Option<(Vec<usize>, Vec<f64>)> = None;
        let tokens = greedy_search(enc.frames, self.config.max_symbols_per_frame, self.config.blank_index, |t, history| {
            let window = self.history_window(history);
            let pred_proj = match &cached {
                Some((w, p)) if *w == window => p.clone(),
                _ => {
                    let state = self.predict(decoder, history, cond)?;
                    let p = joiner.pred_proj.forward(&state);
                    cached = Some((window, p.clone()));
                    p
                }
            };
            Ok(self.join_projected(decoder, &enc_proj[t], &pred_proj).1)
        })?;
        let mode = mode.unwrap_or(ModeId::Punctuated);
        Ok(LabelSequence::new(tokens, mode))
    }
}
