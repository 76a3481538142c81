//! Corpus preparation for transducer training: ingestion and export of
//! JSONL corpora, derivation of normalized references, auto-punctuation,
//! limited-punctuation splits and a synthetic toy corpus.

mod bench;
mod features;
mod synth;

use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::text::{is_erroneous, normalize, restore, PunctuationConfig, Restorer, Transcript};
use crate::transducer::{CharVocab, LabelSequence, ModeId, TrainingExample};
use crate::{Error, Result};

pub use bench::{rtf_bench, RtfReport, UtteranceTiming};
pub use features::{read_feature_file, write_feature_file, FeatureRef};
pub use synth::{synth_toy_corpus, SynthConfig};

/// Where a sample's punctuated reference came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum YpSource {
    Original,
    Auto,
    Absent,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub utterance_id: String,
    pub features: Option<FeatureRef>,
    pub y_n: Transcript,
    pub y_p: Option<Transcript>,
    pub y_p_source: YpSource,
    /// The original punctuated reference after auto-punctuation replaced it.
    pub original_y_p: Option<Transcript>,
    pub audio_seconds: Option<f64>,
}

impl Sample {
    fn check(&self) -> Result<()> {
        if (self.y_p_source == YpSource::Absent) != self.y_p.is_none() {
            return Err(Error::InvalidArgument(format!(
                "sample `{}`: y_p source {:?} disagrees with y_p presence",
                self.utterance_id, self.y_p_source
            )));
        }
        Ok(())
    }

    /// Character-level training labels for this sample.
    pub fn training_example(&self, vocab: &CharVocab, base: Option<&Path>) -> Result<TrainingExample> {
        let features = self
            .features
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument(format!("sample `{}` has no features", self.utterance_id)))?
            .load(base)?;
        let y_n = LabelSequence::new(vocab.encode(&self.y_n.text())?, ModeId::Normalized);
        let y_p = match &self.y_p {
            Some(t) => Some(LabelSequence::new(vocab.encode(&t.text())?, ModeId::Punctuated)),
            None => None,
        };
        Ok(TrainingExample { features, y_n, y_p })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Corpus {
    pub samples: Vec<Sample>,
    /// Directory against which relative feature paths resolve.
    pub base_dir: Option<PathBuf>,
}

impl Corpus {
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        let mut seen = HashSet::new();
        for s in &samples {
            s.check()?;
            if !seen.insert(s.utterance_id.as_str()) {
                return Err(Error::DuplicateId(s.utterance_id.clone()));
            }
        }
        Ok(Self { samples, base_dir: None })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Share of samples carrying a punctuated reference; 0 for an empty corpus.
    pub fn punctuation_fraction(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().filter(|s| s.y_p.is_some()).count() as f64 / self.samples.len() as f64
    }

    pub fn training_examples(&self, vocab: &CharVocab) -> Result<Vec<TrainingExample>> {
        self.samples
            .iter()
            .map(|s| s.training_example(vocab, self.base_dir.as_deref()))
            .collect()
    }
}

/// One JSONL corpus row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusRow {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_punct: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_norm: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<FeatureRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio_seconds: Option<f64>,
}

/// A row left out of the corpus, with the reason.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedSample {
    pub line: usize,
    pub id: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ingested {
    pub corpus: Corpus,
    pub dropped: Vec<DroppedSample>,
}

fn sample_from_row(row: CorpusRow, cfg: &PunctuationConfig) -> std::result::Result<Sample, String> {
    let y_p = row
        .text_punct
        .as_deref()
        .map(|t| Transcript::from_text(row.id.clone(), t, cfg).with_audio_seconds(row.audio_seconds));
    if let Some(p) = &y_p {
        if is_erroneous(p) {
            return Err("fully uppercase text".into());
        }
    }
    let y_n = match (row.text_norm.as_deref(), &y_p) {
        (Some(t), _) => {
            let n = Transcript::from_text(row.id.clone(), t, cfg).with_audio_seconds(row.audio_seconds);
            if !n.is_normalized() {
                return Err("text_norm contains punctuation or uppercase letters".into());
            }
            if let Some(p) = &y_p {
                if normalize(p).tokens != n.tokens {
                    return Err(format!(
                        "text_norm `{}` is not the normalized form of text_punct `{}`",
                        n.text(),
                        p.text()
                    ));
                }
            }
            n
        }
        (None, Some(p)) => normalize(p),
        (None, None) => unreachable!("rows without text are schema errors"),
    };
    Ok(Sample {
        utterance_id: row.id,
        features: row.features,
        y_n,
        y_p_source: if y_p.is_some() { YpSource::Original } else { YpSource::Absent },
        y_p,
        original_y_p: None,
        audio_seconds: row.audio_seconds,
    })
}

/// Parses a JSONL corpus. Malformed rows and duplicate ids are errors;
/// rows that parse but fail the content checks are dropped and reported.
pub fn ingest_reader(reader: impl BufRead, cfg: &PunctuationConfig) -> Result<Ingested> {
    cfg.validate()?;
    let mut samples = Vec::new();
    let mut dropped = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: CorpusRow = serde_json::from_str(&line).map_err(|e| Error::Schema {
            line: line_no,
            message: e.to_string(),
        })?;
        if row.text_punct.is_none() && row.text_norm.is_none() {
            return Err(Error::Schema {
                line: line_no,
                message: "row needs text_punct or text_norm".into(),
            });
        }
        if !seen.insert(row.id.clone()) {
            return Err(Error::DuplicateId(row.id));
        }
        let id = row.id.clone();
        match sample_from_row(row, cfg) {
            Ok(s) => samples.push(s),
            Err(reason) => dropped.push(DroppedSample { line: line_no, id, reason }),
        }
    }
    Ok(Ingested {
        corpus: Corpus::new(samples)?,
        dropped,
    })
}

/// Reads a JSONL corpus file. Relative feature paths resolve against the
/// file's directory.
pub fn ingest(path: impl AsRef<Path>, cfg: &PunctuationConfig) -> Result<Ingested> {
    let path = path.as_ref();
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut out = ingest_reader(file, cfg)?;
    out.corpus.base_dir = path.parent().map(Path::to_path_buf);
    Ok(out)
}

pub fn corpus_rows(corpus: &Corpus) -> Vec<CorpusRow> {
    corpus
        .samples
        .iter()
        .map(|s| CorpusRow {
            id: s.utterance_id.clone(),
            text_punct: s.y_p.as_ref().map(Transcript::text),
            text_norm: Some(s.y_n.text()),
            features: s.features.clone(),
            audio_seconds: s.audio_seconds,
        })
        .collect()
}

/// Writes the corpus in the ingest format, one row per sample.
pub fn export_writer(corpus: &Corpus, mut out: impl Write) -> Result<()> {
    for row in corpus_rows(corpus) {
        serde_json::to_writer(&mut out, &row)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn export(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    export_writer(corpus, std::io::BufWriter::new(std::fs::File::create(path)?))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RestoreFailure {
    pub id: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AutoPunctuated {
    pub corpus: Corpus,
    pub failures: Vec<RestoreFailure>,
}

/// Replaces every punctuated reference with `restore(y_n)`. A failed
/// restoration leaves the sample without a punctuated reference; failing on
/// every sample is an error.
pub fn auto_punctuate(corpus: &Corpus, restorer: &dyn Restorer, cfg: &PunctuationConfig) -> Result<AutoPunctuated> {
    let outcomes: Vec<Result<Transcript>> = corpus
        .samples
        .par_iter()
        .map(|s| {
            let restored = restore(&s.y_n, restorer, cfg)?;
            if normalize(&restored).tokens != s.y_n.tokens {
                return Err(Error::Restore {
                    id: s.utterance_id.clone(),
                    message: format!("restored text `{}` does not normalize to the input", restored.text()),
                });
            }
            Ok(restored)
        })
        .collect();
    let mut failures = Vec::new();
    let mut samples = Vec::with_capacity(corpus.len());
    for (s, outcome) in corpus.samples.iter().zip(outcomes) {
        let mut s = s.clone();
        let original = s.y_p.take();
        s.original_y_p = original.or(s.original_y_p);
        match outcome {
            Ok(t) => {
                s.y_p = Some(t);
                s.y_p_source = YpSource::Auto;
            }
            Err(e) => {
                failures.push(RestoreFailure {
                    id: s.utterance_id.clone(),
                    message: match e {
                        Error::Restore { message, .. } => message,
                        other => other.to_string(),
                    },
                });
                s.y_p_source = YpSource::Absent;
            }
        }
        samples.push(s);
    }
    if !corpus.is_empty() && failures.len() == corpus.len() {
        let first = &failures[0];
        return Err(Error::Restore {
            id: first.id.clone(),
            message: format!("restoration failed for all {} samples: {}", failures.len(), first.message),
        });
    }
    Ok(AutoPunctuated {
        corpus: Corpus {
            samples,
            base_dir: corpus.base_dir.clone(),
        },
        failures,
    })
}

/// Keeps the punctuated reference on exactly `round(p_fraction * N)` samples
/// drawn uniformly without replacement and strips it from the rest.
pub fn split_proportion(corpus: &Corpus, p_fraction: f64, seed: u64) -> Result<Corpus> {
    if !(0.0..=1.0).contains(&p_fraction) {
        return Err(Error::InvalidArgument(format!("p_fraction {p_fraction} is outside [0, 1]")));
    }
    if let Some(s) = corpus.samples.iter().find(|s| s.y_p.is_none()) {
        return Err(Error::InvalidArgument(format!(
            "sample `{}` has no punctuated reference to keep",
            s.utterance_id
        )));
    }
    let n = corpus.len();
    let keep_count = (p_fraction * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![false; n];
    for i in rand::seq::index::sample(&mut rng, n, keep_count) {
        keep[i] = true;
    }
    let samples = corpus
        .samples
        .iter()
        .zip(keep)
        .map(|(s, k)| {
            let mut s = s.clone();
            if !k {
                s.y_p = None;
                s.y_p_source = YpSource::Absent;
            }
            s
        })
        .collect();
    Ok(Corpus {
        samples,
        base_dir: corpus.base_dir.clone(),
    })
}
