//! RAkEL: label-powerset trees over random label subsets, voting per label.

use std::collections::HashMap;

use rand::seq::{index, SliceRandom};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::birel::to_columns;
use crate::error::{Error, Result};
use crate::seed;
use crate::weak_learners::tree::{TreeBuilder, TreeModel, TreeParams};

/// Draws of a complete subset collection before falling back to a greedy
/// covering.
const COVERAGE_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Member {
    labels: Vec<usize>,
    /// Bit pattern (over `labels`) of each powerset class.
    patterns: Vec<Vec<bool>>,
    tree: TreeModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct Rakel {
    n_labels: usize,
    members: Vec<Member>,
}

/// Default member count: ⌈2p / subset_size⌉.
pub fn default_model_count(p: usize, subset_size: usize) -> usize {
    (2 * p).div_ceil(subset_size.max(1))
}

fn binomial_at_least(n: usize, k: usize, m: usize) -> bool {
    let mut c = 1.0f64;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
        if c >= m as f64 {
            return true;
        }
    }
    c >= m as f64
}

/// `m` label subsets of size `k` covering all `p` labels. Whole collections
/// are redrawn until they cover (subsets distinct whenever enough exist);
/// if that keeps failing, or `m·k < p` makes it impossible, subsets are
/// built greedily from the uncovered labels, adding members as needed.
fn sample_subsets(p: usize, k: usize, m: usize, rng: &mut seed::Rng) -> Vec<Vec<usize>> {
    let distinct = binomial_at_least(p, k, m);
    if m * k >= p {
        for _ in 0..COVERAGE_ATTEMPTS {
            let mut subsets: Vec<Vec<usize>> = Vec::with_capacity(m);
            while subsets.len() < m {
                let mut s = index::sample(rng, p, k).into_vec();
                s.sort_unstable();
                if !distinct || !subsets.contains(&s) {
                    subsets.push(s);
                }
            }
            let mut covered = vec![false; p];
            subsets.iter().flatten().for_each(|&j| covered[j] = true);
            if covered.iter().all(|&c| c) {
                return subsets;
            }
        }
    }
    let mut uncovered: Vec<usize> = (0..p).collect();
    uncovered.shuffle(rng);
    let count = m.max(p.div_ceil(k));
    (0..count)
        .map(|_| {
            let take = uncovered.len().min(k);
            let mut s: Vec<usize> = uncovered.drain(..take).collect();
            while s.len() < k {
                let j = index::sample(rng, p, 1).index(0);
                if !s.contains(&j) {
                    s.push(j);
                }
            }
            s.sort_unstable();
            s
        })
        .collect()
}

impl Rakel {
    /// Subsets are drawn from `derive(seed, [0])`; member `i`'s tree uses
    /// `derive(seed, [1, i])`.
    pub(crate) fn fit(
        rows: &[Vec<f64>],
        bits: &[Vec<bool>],
        subset_size: usize,
        model_count: usize,
        params: &TreeParams,
        seed: u64,
    ) -> Result<Self> {
        let p = bits.first().map_or(0, Vec::len);
        if subset_size == 0 || subset_size > p {
            return Err(Error::InvalidParameter(format!("RAkEL subset size {subset_size} must be in 1..={p}")));
        }
        if model_count == 0 {
            return Err(Error::InvalidParameter("RAkEL needs at least one member".into()));
        }
        let subsets = sample_subsets(p, subset_size, model_count, &mut seed::rng(seed::derive(seed, &[0])));
        let columns = to_columns(rows);
        let all: Vec<usize> = (0..rows.len()).collect();
        let members = subsets
            .into_par_iter()
            .enumerate()
            .map(|(i, labels)| {
                let mut patterns: Vec<Vec<bool>> = Vec::new();
                let mut class_of: HashMap<Vec<bool>, usize> = HashMap::new();
                let target: Vec<usize> = bits
                    .iter()
                    .map(|b| {
                        let pat: Vec<bool> = labels.iter().map(|&j| b[j]).collect();
                        *class_of.entry(pat.clone()).or_insert_with(|| {
                            patterns.push(pat);
                            patterns.len() - 1
                        })
                    })
                    .collect();
                let tree = TreeBuilder::new(&columns, &target, patterns.len().max(1))
                    .fit(&all, params, seed::derive(seed, &[1, i as u64]));
                Member { labels, patterns, tree }
            })
            .collect();
        Ok(Rakel { n_labels: p, members })
    }

    pub(crate) fn subsets(&self) -> Vec<Vec<usize>> {
        self.members.iter().map(|m| m.labels.clone()).collect()
    }

    /// Per label, the mean predicted bit over the members containing it
    /// (0 for a label no member covers).
    pub(crate) fn predict(&self, q: &[f64]) -> Vec<f64> {
        let mut sum = vec![0.0; self.n_labels];
        let mut count = vec![0usize; self.n_labels];
        for m in &self.members {
            let pattern = &m.patterns[m.tree.predict_row(q)];
            for (&j, &b) in m.labels.iter().zip(pattern) {
                sum[j] += f64::from(u8::from(b));
                count[j] += 1;
            }
        }
        sum.iter()
            .zip(&count)
            .map(|(&s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
            .collect()
    }
}
