//! Unit-cost Levenshtein alignment with a deterministic backtrace.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EditOp {
    Match,
    Sub,
    Del,
    Ins,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AlignStep {
    pub ref_index: Option<usize>,
    pub hyp_index: Option<usize>,
    pub op: EditOp,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AlignmentResult {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub matches: usize,
    pub trace: Vec<AlignStep>,
}

impl AlignmentResult {
    pub fn errors(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }
}

/// Minimum-cost alignment of `hypothesis` against `reference`.
///
/// When several alignments share the minimum cost the backtrace, walking
/// from the ends of both sequences, prefers Match, then Sub, then Del, then
/// Ins. Error counts do not depend on this choice.
pub fn align<T, F>(reference: &[T], hypothesis: &[T], eq: F) -> AlignmentResult
where
    F: Fn(&T, &T) -> bool,
{
    let n = reference.len();
    let m = hypothesis.len();
    let width = m + 1;
    let mut cost = vec![0u32; (n + 1) * width];
    for j in 0..=m {
        cost[j] = j as u32;
    }
    for i in 1..=n {
        cost[i * width] = i as u32;
        for j in 1..=m {
            let diag = cost[(i - 1) * width + j - 1] + u32::from(!eq(&reference[i - 1], &hypothesis[j - 1]));
            let del = cost[(i - 1) * width + j] + 1;
            let ins = cost[i * width + j - 1] + 1;
            cost[i * width + j] = diag.min(del).min(ins);
        }
    }

    let mut result = AlignmentResult::default();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = cost[i * width + j];
        let step = if i > 0 && j > 0 {
            let same = eq(&reference[i - 1], &hypothesis[j - 1]);
            let diag = cost[(i - 1) * width + j - 1];
            if same && diag == here {
                EditOp::Match
            } else if !same && diag + 1 == here {
                EditOp::Sub
            } else if cost[(i - 1) * width + j] + 1 == here {
                EditOp::Del
            } else {
                EditOp::Ins
            }
        } else if i > 0 {
            EditOp::Del
        } else {
            EditOp::Ins
        };
        let (r, h) = match step {
            EditOp::Match => {
                result.matches += 1;
                (Some(i - 1), Some(j - 1))
            }
            EditOp::Sub => {
                result.substitutions += 1;
                (Some(i - 1), Some(j - 1))
            }
            EditOp::Del => {
                result.deletions += 1;
                (Some(i - 1), None)
            }
            EditOp::Ins => {
                result.insertions += 1;
                (None, Some(j - 1))
            }
        };
        if r.is_some() {
            i -= 1;
        }
        if h.is_some() {
            j -= 1;
        }
        result.trace.push(AlignStep {
            ref_index: r,
            hyp_index: h,
            op: step,
        });
    }
    result.trace.reverse();
    debug_assert_eq!(result.errors() as u32, cost[n * width + m]);
    result
}
