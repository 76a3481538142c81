//! Punctuation- and case-aware error rates.
//!
//! Each utterance is aligned four times, once per [`ViewKind`]. Word errors
//! come from the unpunctuated, uncased view; punctuation errors are what the
//! punctuated view adds on top of that, and case errors what the cased view
//! adds. Corpus figures are always ratios of summed counts.
//!
//! [`ViewKind`]: crate::text::ViewKind

mod align;
mod report;
mod rtf;
mod significance;

pub use align::{align, AlignStep, AlignmentResult, EditOp};
pub use report::{
    compute_metrics, corpus_metrics, pair_by_id, render_alignment, score_corpus, CorpusScore, ErrorCounts,
    MetricReport, Rate, UtteranceReport,
};
pub use rtf::rtf;
pub use significance::{matched_pairs_z, mpssw_test, Metric, SignificanceResult, DEGENERATE_STATISTIC};
