//! Real-time-factor benchmark: one model, utterances decoded one after
//! another on the calling thread.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::metrics::rtf;
use crate::transducer::{FeatureSequence, ModeId, TransducerModel};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtteranceTiming {
    pub id: String,
    pub inference_seconds: f64,
    pub audio_seconds: f64,
    pub rtf: f64,
    /// Decoded symbol ids, kept so runs can be compared for content.
    pub tokens: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RtfReport {
    pub utterances: Vec<UtteranceTiming>,
    pub total_inference_seconds: f64,
    pub total_audio_seconds: f64,
    /// Total inference time over total audio time.
    pub rtf: f64,
}

impl RtfReport {
    /// Aggregates per-utterance timings.
    pub fn from_timings(utterances: Vec<UtteranceTiming>) -> Result<Self> {
        let total_inference_seconds: f64 = utterances.iter().map(|u| u.inference_seconds).sum();
        let total_audio_seconds: f64 = utterances.iter().map(|u| u.audio_seconds).sum();
        Ok(Self {
            rtf: rtf(total_inference_seconds, total_audio_seconds)?,
            utterances,
            total_inference_seconds,
            total_audio_seconds,
        })
    }
}

/// Decodes every `(id, features, audio_seconds)` item in order and times
/// each decode with a monotonic clock.
pub fn rtf_bench(
    model: &TransducerModel,
    items: &[(String, FeatureSequence, Option<f64>)],
    mode: Option<ModeId>,
) -> Result<RtfReport> {
    if let Some((id, _, _)) = items.iter().find(|(_, _, a)| a.is_none()) {
        return Err(Error::InvalidArgument(format!("utterance `{id}` has no audio_seconds")));
    }
    model.route(mode)?;
    let mut timings = Vec::with_capacity(items.len());
    for (id, features, audio) in items {
        let audio = audio.expect("checked above");
        let start = Instant::now();
        let decoded = model.greedy_decode(features, mode)?;
        let inference = start.elapsed().as_secs_f64();
        timings.push(UtteranceTiming {
            id: id.clone(),
            inference_seconds: inference,
            audio_seconds: audio,
            rtf: rtf(inference, audio)?,
            tokens: decoded.tokens,
        });
    }
    RtfReport::from_timings(timings)
}
