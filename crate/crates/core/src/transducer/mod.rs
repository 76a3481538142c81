//! Stateless RNN transducer: a causal convolutional encoder, a predictor that
//! sees only the last few emitted tokens, and a joiner producing per-cell
//! output distributions. Three decoder layouts are supported: a single
//! punctuated decoder, two mode-specific decoders sharing the encoder, and a
//! single decoder whose predictor is conditioned on a learned mode embedding.

mod checkpoint;
mod config;
mod decode;
mod loss;
mod model;
mod objective;
mod tensor;
mod train;
mod vocab;

pub use decode::greedy_search;
pub use checkpoint::{Checkpoint, NamedTensor, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use config::{Architecture, LossWeights, ModeId, ModelConfig};
pub use loss::{logits_grad, rnnt_loss, rnnt_loss_grad, LogitLattice, NORMALIZATION_TOLERANCE};
pub use model::{DecoderParams, EncoderParams, EncoderStates, FeatureSequence, JoinerParams, LabelSequence, Params, TransducerModel};
pub use objective::{combine_conditioned, ConditionedSample};
pub use tensor::{Linear, Tensor};
pub use train::{train, train_with, EpochLog, TrainConfig, TrainOutcome, TrainingExample};
pub use vocab::{CharVocab, BLANK_SYMBOL};
