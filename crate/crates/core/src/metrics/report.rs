use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::ops::{Add, AddAssign};

use num_rational::Ratio;
use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use super::align::{align, AlignmentResult, EditOp};
use crate::text::{project, Token, Transcript, ViewKind};
use crate::{Error, Result};

/// Raw edit-distance numerators and reference-size denominators.
///
/// `e_*` are total errors on each view; `n_pc` is the reference token count
/// with punctuation and case, `n_npnc` the plain word count, `n_p` the number
/// of reference marks and `n_c` the number of reference words with at least
/// one uppercase letter.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct ErrorCounts {
    pub e_pc: u64,
    pub e_pnc: u64,
    pub e_npc: u64,
    pub e_npnc: u64,
    pub n_pc: u64,
    pub n_npnc: u64,
    pub n_p: u64,
    pub n_c: u64,
}

impl Add for ErrorCounts {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl AddAssign for ErrorCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.e_pc += rhs.e_pc;
        self.e_pnc += rhs.e_pnc;
        self.e_npc += rhs.e_npc;
        self.e_npnc += rhs.e_npnc;
        self.n_pc += rhs.n_pc;
        self.n_npnc += rhs.n_npnc;
        self.n_p += rhs.n_p;
        self.n_c += rhs.n_c;
    }
}

impl std::iter::Sum for ErrorCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

/// An exact error rate. The numerator may be negative for PuncER and CaseER.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Rate {
    pub numerator: i64,
    pub denominator: i64,
}

impl Rate {
    fn new(numerator: i64, denominator: u64) -> Option<Self> {
        (denominator > 0).then_some(Self {
            numerator,
            denominator: denominator as i64,
        })
    }

    pub fn ratio(&self) -> Ratio<i64> {
        Ratio::new(self.numerator, self.denominator)
    }

    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }

    pub fn is_negative(&self) -> bool {
        self.numerator < 0
    }

    /// Percentage with two decimals, rounded half away from zero using
    /// integer arithmetic only.
    pub fn percent(&self) -> String {
        let num = i128::from(self.numerator) * 10_000;
        let den = i128::from(self.denominator);
        let hundredths = (num.abs() * 2 + den) / (den * 2);
        let sign = if num < 0 && hundredths != 0 { "-" } else { "" };
        format!("{sign}{}.{:02}", hundredths / 100, hundredths % 100)
    }
}

impl Serialize for Rate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Rate", 4)?;
        st.serialize_field("numerator", &self.numerator)?;
        st.serialize_field("denominator", &self.denominator)?;
        st.serialize_field("value", &self.value())?;
        st.serialize_field("percent", &self.percent())?;
        st.end()
    }
}

/// The four rates derived from a set of [`ErrorCounts`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MetricReport {
    pub counts: ErrorCounts,
}

impl MetricReport {
    pub fn from_counts(counts: ErrorCounts) -> Self {
        Self { counts }
    }

    pub fn wer(&self) -> Option<Rate> {
        Rate::new(self.counts.e_npnc as i64, self.counts.n_npnc)
    }

    pub fn pcwer(&self) -> Option<Rate> {
        Rate::new(self.counts.e_pc as i64, self.counts.n_pc)
    }

    pub fn puncer(&self) -> Option<Rate> {
        Rate::new(self.counts.e_pnc as i64 - self.counts.e_npnc as i64, self.counts.n_p)
    }

    pub fn caseer(&self) -> Option<Rate> {
        Rate::new(self.counts.e_npc as i64 - self.counts.e_npnc as i64, self.counts.n_c)
    }

    /// Set when PuncER or CaseER came out below zero.
    pub fn negative_rate(&self) -> bool {
        self.puncer().is_some_and(|r| r.is_negative()) || self.caseer().is_some_and(|r| r.is_negative())
    }
}

impl Add for MetricReport {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self::from_counts(self.counts + rhs.counts)
    }
}

impl Serialize for MetricReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let c = &self.counts;
        let mut st = s.serialize_struct("MetricReport", 13)?;
        st.serialize_field("e_pc", &c.e_pc)?;
        st.serialize_field("e_pnc", &c.e_pnc)?;
        st.serialize_field("e_npc", &c.e_npc)?;
        st.serialize_field("e_npnc", &c.e_npnc)?;
        st.serialize_field("n_pc", &c.n_pc)?;
        st.serialize_field("n_npnc", &c.n_npnc)?;
        st.serialize_field("n_p", &c.n_p)?;
        st.serialize_field("n_c", &c.n_c)?;
        st.serialize_field("wer", &self.wer())?;
        st.serialize_field("puncer", &self.puncer())?;
        st.serialize_field("caseer", &self.caseer())?;
        st.serialize_field("pcwer", &self.pcwer())?;
        st.serialize_field("negative_rate", &self.negative_rate())?;
        st.end()
    }
}

fn view_alignment(reference: &[Token], hypothesis: &[Token], view: ViewKind) -> (Vec<Token>, Vec<Token>, AlignmentResult) {
    let r = project(reference, view);
    let h = project(hypothesis, view);
    let a = align(&r, &h, |x, y| x == y);
    (r, h, a)
}

/// Scores one hypothesis against its reference on all four views.
pub fn compute_metrics(reference: &Transcript, hypothesis: &Transcript) -> MetricReport {
    let errors = |view| view_alignment(&reference.tokens, &hypothesis.tokens, view).2.errors() as u64;
    let counts = ErrorCounts {
        e_pc: errors(ViewKind::PC),
        e_pnc: errors(ViewKind::PNC),
        e_npc: errors(ViewKind::NPC),
        e_npnc: errors(ViewKind::NPNC),
        n_pc: reference.tokens.len() as u64,
        n_npnc: reference.tokens.iter().filter(|t| t.is_word()).count() as u64,
        n_p: reference.tokens.iter().filter(|t| t.is_punct()).count() as u64,
        n_c: reference.tokens.iter().filter(|t| t.is_cased()).count() as u64,
    };
    MetricReport::from_counts(counts)
}

/// Sums counts over matched (reference, hypothesis) pairs and recomputes the
/// rates from the sums.
pub fn corpus_metrics(pairs: &[(Transcript, Transcript)]) -> Result<MetricReport> {
    let mismatched: Vec<String> = pairs
        .iter()
        .filter(|(r, h)| r.utterance_id != h.utterance_id)
        .map(|(r, h)| format!("{}/{}", r.utterance_id, h.utterance_id))
        .collect();
    if !mismatched.is_empty() {
        return Err(Error::IdMismatch {
            missing_hyp: mismatched,
            missing_ref: Vec::new(),
            duplicates: Vec::new(),
        });
    }
    let counts = pairs.iter().map(|(r, h)| compute_metrics(r, h).counts).sum();
    Ok(MetricReport::from_counts(counts))
}

/// Matches hypotheses to references by utterance id, keeping reference order.
pub fn pair_by_id(references: Vec<Transcript>, hypotheses: Vec<Transcript>) -> Result<Vec<(Transcript, Transcript)>> {
    let mut duplicates = BTreeSet::new();
    let mut seen = BTreeSet::new();
    for t in &references {
        if !seen.insert(t.utterance_id.clone()) {
            duplicates.insert(t.utterance_id.clone());
        }
    }
    let mut by_id: HashMap<String, Transcript> = HashMap::new();
    for h in hypotheses {
        if let Some(prev) = by_id.insert(h.utterance_id.clone(), h) {
            duplicates.insert(prev.utterance_id);
        }
    }
    let mut pairs = Vec::with_capacity(references.len());
    let mut missing_hyp = Vec::new();
    for r in references {
        match by_id.remove(&r.utterance_id) {
            Some(h) => pairs.push((r, h)),
            None => missing_hyp.push(r.utterance_id),
        }
    }
    let mut missing_ref: Vec<String> = by_id.into_keys().collect();
    missing_ref.sort();
    if !missing_hyp.is_empty() || !missing_ref.is_empty() || !duplicates.is_empty() {
        return Err(Error::IdMismatch {
            missing_hyp,
            missing_ref,
            duplicates: duplicates.into_iter().collect(),
        });
    }
    Ok(pairs)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UtteranceReport {
    pub id: String,
    #[serde(flatten)]
    pub report: MetricReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorpusScore {
    pub corpus: MetricReport,
    pub utterances: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_utterance: Option<Vec<UtteranceReport>>,
}

/// Scores a paired corpus, optionally on a pool of `threads` workers.
/// The result does not depend on the thread count.
pub fn score_corpus(pairs: &[(Transcript, Transcript)], threads: usize) -> Result<Vec<UtteranceReport>> {
    let score = |(r, h): &(Transcript, Transcript)| UtteranceReport {
        id: r.utterance_id.clone(),
        report: compute_metrics(r, h),
    };
    if let Some(bad) = pairs.iter().find(|(r, h)| r.utterance_id != h.utterance_id) {
        return Err(Error::IdMismatch {
            missing_hyp: vec![bad.0.utterance_id.clone()],
            missing_ref: vec![bad.1.utterance_id.clone()],
            duplicates: Vec::new(),
        });
    }
    if threads <= 1 {
        return Ok(pairs.iter().map(score).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    Ok(pool.install(|| pairs.par_iter().map(score).collect()))
}

impl CorpusScore {
    pub fn from_utterances(reports: Vec<UtteranceReport>, keep_per_utterance: bool) -> Self {
        let counts = reports.iter().map(|u| u.report.counts).sum();
        Self {
            corpus: MetricReport::from_counts(counts),
            utterances: reports.len(),
            per_utterance: keep_per_utterance.then_some(reports),
        }
    }
}

/// Human-readable alignment of one utterance on one view, in the spirit of
/// sclite's `pra` output.
pub fn render_alignment(reference: &Transcript, hypothesis: &Transcript, view: ViewKind) -> String {
    let (r, h, a) = view_alignment(&reference.tokens, &hypothesis.tokens, view);
    let mut rows = [String::from("REF: "), String::from("HYP: "), String::from("EVAL:")];
    for step in &a.trace {
        let rs = step.ref_index.map_or_else(|| "*".repeat(3), |i| r[i].surface.clone());
        let hs = step.hyp_index.map_or_else(|| "*".repeat(3), |j| h[j].surface.clone());
        let ev = match step.op {
            EditOp::Match => "",
            EditOp::Sub => "S",
            EditOp::Del => "D",
            EditOp::Ins => "I",
        };
        let width = rs.chars().count().max(hs.chars().count()).max(1);
        for (row, cell) in rows.iter_mut().zip([rs.as_str(), hs.as_str(), ev]) {
            let _ = write!(row, " {cell:<width$}");
        }
    }
    let mut out = format!(
        "id: {}  view: {}  (S={} D={} I={} C={})\n",
        reference.utterance_id,
        view.label(),
        a.substitutions,
        a.deletions,
        a.insertions,
        a.matches
    );
    for row in rows {
        out.push_str(row.trim_end());
        out.push('\n');
    }
    out
}
