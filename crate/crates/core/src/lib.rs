//! Punctuation- and case-aware speech recognition scoring, together with a
//! small stateless transducer that produces both punctuated and normalized
//! transcripts from one encoder.
//!
//! * [`text`]: tokenization of punctuated text, the four scoring views and
//!   normalization / restoration.
//! * [`metrics`]: alignment, WER / PuncER / CaseER / PC-WER, corpus
//!   aggregation, matched-pair significance testing and real-time factor.
//! * [`transducer`]: encoder, stateless (optionally mode-conditioned)
//!   predictor, joiner, RNN-T loss with exact gradients, the three training
//!   objectives, greedy decoding and training.
//! * [`pipeline`]: corpus ingestion, auto-punctuation, proportion splitting
//!   and toy corpus synthesis.

pub mod error;
pub mod metrics;
pub mod pipeline;
pub mod text;
pub mod transducer;

pub use error::{Error, Result};
