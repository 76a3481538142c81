//! Self-describing JSON checkpoints: model configuration, optional output
//! vocabulary, and every parameter tensor by name with its shape.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::model::TransducerModel;
use super::vocab::CharVocab;
use crate::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "punctasr-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocab: Option<CharVocab>,
    pub tensors: Vec<NamedTensor>,
}

impl Checkpoint {
    pub fn from_model(model: &TransducerModel, vocab: Option<&CharVocab>) -> Self {
        let tensors = model
            .params
            .tensors()
            .into_iter()
            .map(|(name, t)| NamedTensor {
                name,
                shape: t.shape.clone(),
                data: t.data.clone(),
            })
            .collect();
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config: model.config.clone(),
            vocab: vocab.cloned(),
            tensors,
        }
    }

    /// Rebuilds the model, checking that every tensor is present exactly once
    /// with the shape the configuration implies.
    pub fn to_model(&self) -> Result<TransducerModel> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unknown format `{}`", self.format)));
        }
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported version {} (expected {CHECKPOINT_VERSION})",
                self.version
            )));
        }
        if let Some(v) = &self.vocab {
            if v.len() != self.config.vocab_size {
                return Err(Error::Checkpoint(format!(
                    "vocabulary has {} symbols but the model outputs {}",
                    v.len(),
                    self.config.vocab_size
                )));
            }
        }
        let mut model = TransducerModel::zeroed(self.config.clone())?;
        let mut slots = model.params.tensors_mut();
        if slots.len() != self.tensors.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} tensors, found {}",
                slots.len(),
                self.tensors.len()
            )));
        }
        let mut filled = vec![false; slots.len()];
        for stored in &self.tensors {
            let Some(k) = slots.iter().position(|(name, _)| *name == stored.name) else {
                return Err(Error::Checkpoint(format!("unexpected tensor `{}`", stored.name)));
            };
            if filled[k] {
                return Err(Error::Checkpoint(format!("tensor `{}` appears twice", stored.name)));
            }
            let target = &mut slots[k].1;
            if target.shape != stored.shape || stored.data.len() != target.data.len() {
                return Err(Error::Checkpoint(format!(
                    "tensor `{}` has shape {:?} with {} values, expected {:?}",
                    stored.name,
                    stored.shape,
                    stored.data.len(),
                    target.shape
                )));
            }
            target.data.copy_from_slice(&stored.data);
            filled[k] = true;
        }
        drop(slots);
        if !model.params.is_finite() {
            return Err(Error::Checkpoint("non-finite parameter values".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(file, self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Checkpoint(e.to_string()))
    }
}
