//! Packed binary feature files: the ASCII magic `PASRFEAT`, frame count and
//! feature dimension as little-endian `u32`, then the frames row by row as
//! little-endian `f64`.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::transducer::FeatureSequence;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"PASRFEAT";

pub fn write_feature_file(path: impl AsRef<Path>, features: &FeatureSequence) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    out.write_all(MAGIC)?;
    for n in [features.frames(), features.dim()] {
        let n = u32::try_from(n).map_err(|_| Error::InvalidArgument("feature matrix too large".into()))?;
        out.write_all(&n.to_le_bytes())?;
    }
    for v in features.as_flat() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_feature_file(path: impl AsRef<Path>) -> Result<FeatureSequence> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let bad = |msg: &str| Error::InvalidArgument(format!("{}: {msg}", path.display()));
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(bad("not a feature file"));
    }
    let frames = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let dim = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
    let body = &bytes[16..];
    if body.len() != frames * dim * 8 {
        return Err(bad("length does not match header"));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    FeatureSequence::from_flat(frames, dim, data)
}

/// Features stored inline as rows or as a path to a packed file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureRef {
    File(PathBuf),
    Inline(FeatureSequence),
}

impl FeatureRef {
    /// Loads the features; relative paths resolve against `base`.
    pub fn load(&self, base: Option<&Path>) -> Result<FeatureSequence> {
        match self {
            FeatureRef::Inline(f) => Ok(f.clone()),
            FeatureRef::File(p) if p.is_relative() => match base {
                Some(b) => read_feature_file(b.join(p)),
                None => read_feature_file(p),
            },
            FeatureRef::File(p) => read_feature_file(p),
        }
    }
}
