//! Multilabel k-nearest neighbors: per label, a Bayesian posterior from the
//! number of positive neighbors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::squared_euclidean;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct Mlknn {
    k: usize,
    /// Standardized training rows.
    rows: Vec<Vec<f64>>,
    bits: Vec<Vec<bool>>,
    /// P(H_j = 1).
    prior: Vec<f64>,
    /// `pos[j][c]` = P(c of k neighbors positive | H_j = 1); `neg` likewise
    /// for H_j = 0.
    pos: Vec<Vec<f64>>,
    neg: Vec<Vec<f64>>,
}

/// Indices of the `k` rows nearest to `q` (ties to the lower index),
/// skipping `exclude`.
fn neighbors(rows: &[Vec<f64>], q: &[f64], k: usize, exclude: Option<usize>) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = rows
        .iter()
        .enumerate()
        .filter(|&(i, _)| Some(i) != exclude)
        .map(|(i, r)| (squared_euclidean(r, q), i))
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < d.len() {
        d.select_nth_unstable_by(k, cmp);
        d.truncate(k);
    }
    d.sort_by(cmp);
    d.into_iter().map(|(_, i)| i).collect()
}

impl Mlknn {
    pub(crate) fn fit(rows: Vec<Vec<f64>>, bits: Vec<Vec<bool>>, k: usize, s: f64) -> Result<Self> {
        let n = rows.len();
        if k == 0 || k >= n {
            return Err(Error::InvalidParameter(format!("MLkNN needs 0 < k < N, got k = {k}, N = {n}")));
        }
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidParameter(format!("smoothing must be positive, got {s}")));
        }
        let p = bits.first().map_or(0, Vec::len);
        let nf = n as f64;
        let prior: Vec<f64> = (0..p)
            .map(|j| (s + bits.iter().filter(|b| b[j]).count() as f64) / (2.0 * s + nf))
            .collect();
        // counts[j][c] of instances with c positive neighbors, by own label
        let mut pos_counts = vec![vec![0usize; k + 1]; p];
        let mut neg_counts = vec![vec![0usize; k + 1]; p];
        for i in 0..n {
            let nb = neighbors(&rows, &rows[i], k, Some(i));
            for j in 0..p {
                let c = nb.iter().filter(|&&t| bits[t][j]).count();
                if bits[i][j] {
                    pos_counts[j][c] += 1;
                } else {
                    neg_counts[j][c] += 1;
                }
            }
        }
        let smooth = |counts: &[usize]| -> Vec<f64> {
            let total: usize = counts.iter().sum();
            counts
                .iter()
                .map(|&c| (s + c as f64) / (s * (k + 1) as f64 + total as f64))
                .collect()
        };
        Ok(Mlknn {
            k,
            prior,
            pos: pos_counts.iter().map(|c| smooth(c)).collect(),
            neg: neg_counts.iter().map(|c| smooth(c)).collect(),
            rows,
            bits,
        })
    }

    /// Posterior P(H_j = 1 | neighbor counts) per label, for a standardized
    /// query.
    pub(crate) fn predict(&self, q: &[f64]) -> Vec<f64> {
        let nb = neighbors(&self.rows, q, self.k, None);
        (0..self.prior.len())
            .map(|j| {
                let c = nb.iter().filter(|&&t| self.bits[t][j]).count();
                let a = self.prior[j] * self.pos[j][c];
                let b = (1.0 - self.prior[j]) * self.neg[j][c];
                if a + b > 0.0 {
                    a / (a + b)
                } else {
                    0.0
                }
            })
            .collect()
    }
}
