//! Matched-pair sentence-segment significance test over per-utterance
//! error counts.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::report::{ErrorCounts, UtteranceReport};
use crate::{Error, Result};

/// Statistic reported when every segment differs by the same nonzero amount.
pub const DEGENERATE_STATISTIC: f64 = 1e9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Wer,
    PuncEr,
    CaseEr,
    PcWer,
}

impl Metric {
    /// The per-segment error numerator of the metric.
    pub fn numerator(self, c: &ErrorCounts) -> i64 {
        match self {
            Metric::Wer => c.e_npnc as i64,
            Metric::PuncEr => c.e_pnc as i64 - c.e_npnc as i64,
            Metric::CaseEr => c.e_npc as i64 - c.e_npnc as i64,
            Metric::PcWer => c.e_pc as i64,
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "wer" => Ok(Metric::Wer),
            "puncer" => Ok(Metric::PuncEr),
            "caseer" => Ok(Metric::CaseEr),
            "pcwer" => Ok(Metric::PcWer),
            other => Err(Error::InvalidArgument(format!("unknown metric `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SignificanceResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_segments: usize,
    pub mean_difference: f64,
    /// The per-segment differences had zero variance.
    pub degenerate: bool,
}

/// Two-sided matched-pairs Z test on per-segment numerator differences
/// (system A minus system B). Segments must be in the same utterance order.
pub fn mpssw_test(a: &[UtteranceReport], b: &[UtteranceReport], metric: Metric) -> Result<SignificanceResult> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "systems have {} and {} segments",
            a.len(),
            b.len()
        )));
    }
    let mismatched: Vec<String> = a
        .iter()
        .zip(b)
        .filter(|(x, y)| x.id != y.id)
        .map(|(x, y)| format!("{}/{}", x.id, y.id))
        .collect();
    if !mismatched.is_empty() {
        return Err(Error::IdMismatch {
            missing_hyp: mismatched,
            missing_ref: Vec::new(),
            duplicates: Vec::new(),
        });
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| (metric.numerator(&x.report.counts) - metric.numerator(&y.report.counts)) as f64)
        .collect();
    matched_pairs_z(&diffs)
}

/// The test on raw differences.
pub fn matched_pairs_z(diffs: &[f64]) -> Result<SignificanceResult> {
    let n = diffs.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "significance test needs at least 2 segments, got {n}"
        )));
    }
    let nf = n as f64;
    let mean = diffs.iter().sum::<f64>() / nf;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (nf - 1.0);
    if var == 0.0 {
        let (statistic, p_value) = if mean == 0.0 {
            (0.0, 1.0)
        } else {
            (DEGENERATE_STATISTIC.copysign(mean), 0.0)
        };
        return Ok(SignificanceResult {
            statistic,
            p_value,
            n_segments: n,
            mean_difference: mean,
            degenerate: true,
        });
    }
    let z = mean / (var / nf).sqrt();
    let p = erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0);
    Ok(SignificanceResult {
        statistic: z,
        p_value: p,
        n_segments: n,
        mean_difference: mean,
        degenerate: false,
    })
}
