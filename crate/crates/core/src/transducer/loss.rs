//! Transducer loss over a `T x (U+1)` lattice of log-distributions.
//!
//! Cell `(t, u)` holds the distribution after `u` emitted labels at encoder
//! frame `t`. A blank moves to `(t+1, u)`, label `y[u]` moves to `(t, u+1)`,
//! and every path ends with a blank out of `(T-1, U)`.

use super::tensor::{log_add, log_sum_exp};
use crate::{Error, Result};

/// Tolerance on `|logsumexp|` for a lattice cell to count as normalized.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct LogitLattice {
    pub frames: usize,
    pub target_len: usize,
    pub vocab: usize,
    pub blank: usize,
    /// `frames * (target_len + 1) * vocab` log-probabilities.
    pub values: Vec<f64>,
}

impl LogitLattice {
    pub fn new(frames: usize, target_len: usize, vocab: usize, blank: usize, values: Vec<f64>) -> Result<Self> {
        let expected = frames * (target_len + 1) * vocab;
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                what: "lattice values",
                expected,
                found: values.len(),
            });
        }
        if blank >= vocab {
            return Err(Error::Lattice(format!("blank {blank} outside vocabulary of {vocab}")));
        }
        Ok(Self {
            frames,
            target_len,
            vocab,
            blank,
            values,
        })
    }

    #[inline]
    pub fn offset(&self, t: usize, u: usize) -> usize {
        (t * (self.target_len + 1) + u) * self.vocab
    }

    #[inline]
    pub fn at(&self, t: usize, u: usize, v: usize) -> f64 {
        self.values[self.offset(t, u) + v]
    }

    pub fn cell(&self, t: usize, u: usize) -> &[f64] {
        let o = self.offset(t, u);
        &self.values[o..o + self.vocab]
    }

    /// Largest `|logsumexp|` over all cells.
    pub fn normalization_error(&self) -> f64 {
        self.values
            .chunks(self.vocab)
            .map(|c| log_sum_exp(c).abs())
            .fold(0.0, f64::max)
    }

    fn check(&self, target: &[usize]) -> Result<()> {
        if target.len() != self.target_len {
            return Err(Error::DimensionMismatch {
                what: "target length",
                expected: self.target_len,
                found: target.len(),
            });
        }
        if self.frames == 0 {
            return Err(Error::Lattice("lattice has no frames".into()));
        }
        if let Some(&bad) = target.iter().find(|&&y| y >= self.vocab || y == self.blank) {
            return Err(Error::Lattice(format!("target label {bad} is blank or out of range")));
        }
        let err = self.normalization_error();
        if !(err <= NORMALIZATION_TOLERANCE) {
            return Err(Error::Lattice(format!("cells are not normalized (|logsumexp| up to {err:e})")));
        }
        Ok(())
    }
}

/// `-log P(target | X)` summed over all alignment paths.
pub fn rnnt_loss(lattice: &LogitLattice, target: &[usize]) -> Result<f64> {
    lattice.check(target)?;
    let alpha = forward_variables(lattice, target);
    Ok(-total_log_prob(lattice, &alpha))
}

/// Gradient of [`rnnt_loss`] with respect to every lattice entry.
pub fn rnnt_loss_grad(lattice: &LogitLattice, target: &[usize]) -> Result<Vec<f64>> {
    lattice.check(target)?;
    Ok(forward_backward(lattice, target).1)
}

/// Loss and gradient without validating the lattice. Callers guarantee
/// the shape and label preconditions.
pub(crate) fn forward_backward(lattice: &LogitLattice, target: &[usize]) -> (f64, Vec<f64>) {
    let (frames, rows) = (lattice.frames, lattice.target_len + 1);
    let alpha = forward_variables(lattice, target);
    let log_p = total_log_prob(lattice, &alpha);
    let blank = lattice.blank;

    let mut beta = vec![f64::NEG_INFINITY; frames * rows];
    for t in (0..frames).rev() {
        for u in (0..rows).rev() {
            let b = if t + 1 == frames && u + 1 == rows {
                lattice.at(t, u, blank)
            } else {
                let mut b = f64::NEG_INFINITY;
                if t + 1 < frames {
                    b = log_add(b, beta[(t + 1) * rows + u] + lattice.at(t, u, blank));
                }
                if u + 1 < rows {
                    b = log_add(b, beta[t * rows + u + 1] + lattice.at(t, u, target[u]));
                }
                b
            };
            beta[t * rows + u] = b;
        }
    }

    let mut grad = vec![0.0; lattice.values.len()];
    for t in 0..frames {
        for u in 0..rows {
            let a = alpha[t * rows + u];
            if a == f64::NEG_INFINITY {
                continue;
            }
            let o = lattice.offset(t, u);
            let after_blank = if t + 1 < frames {
                beta[(t + 1) * rows + u]
            } else if u + 1 == rows {
                0.0
            } else {
                f64::NEG_INFINITY
            };
            grad[o + blank] = -(a + lattice.values[o + blank] + after_blank - log_p).exp();
            if u + 1 < rows {
                let y = target[u];
                grad[o + y] = -(a + lattice.values[o + y] + beta[t * rows + u + 1] - log_p).exp();
            }
        }
    }
    (-log_p, grad)
}

fn forward_variables(lattice: &LogitLattice, target: &[usize]) -> Vec<f64> {
    let (frames, rows) = (lattice.frames, lattice.target_len + 1);
    let mut alpha = vec![f64::NEG_INFINITY; frames * rows];
    alpha[0] = 0.0;
    for t in 0..frames {
        for u in 0..rows {
            if t == 0 && u == 0 {
                continue;
            }
            let mut a = f64::NEG_INFINITY;
            if t > 0 {
                a = log_add(a, alpha[(t - 1) * rows + u] + lattice.at(t - 1, u, lattice.blank));
            }
            if u > 0 {
                a = log_add(a, alpha[t * rows + u - 1] + lattice.at(t, u - 1, target[u - 1]));
            }
            alpha[t * rows + u] = a;
        }
    }
    alpha
}

fn total_log_prob(lattice: &LogitLattice, alpha: &[f64]) -> f64 {
    let (t, u) = (lattice.frames - 1, lattice.target_len);
    alpha[t * (u + 1) + u] + lattice.at(t, u, lattice.blank)
}

/// Chains a gradient on log-softmax outputs back to the pre-softmax logits
/// of one cell: `g - softmax * sum(g)`.
pub fn logits_grad(log_probs: &[f64], grad_log_probs: &[f64]) -> Vec<f64> {
    let total: f64 = grad_log_probs.iter().sum();
    log_probs
        .iter()
        .zip(grad_log_probs)
        .map(|(lp, g)| g - lp.exp() * total)
        .collect()
}
