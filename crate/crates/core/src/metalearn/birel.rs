//! Binary relevance: one decision tree per label, scored by the positive
//! fraction of the reached leaf.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::weak_learners::tree::{TreeBuilder, TreeModel, TreeParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct BinaryRelevance {
    trees: Vec<TreeModel>,
}

/// Rows as columns, the layout the tree builder expects.
pub(crate) fn to_columns(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = rows.first().map_or(0, Vec::len);
    (0..d).map(|j| rows.iter().map(|r| r[j]).collect()).collect()
}

impl BinaryRelevance {
    /// Label `j`'s tree uses seed `derive(seed, [j])`.
    pub(crate) fn fit(rows: &[Vec<f64>], bits: &[Vec<bool>], params: &TreeParams, seed: u64) -> Self {
        let columns = to_columns(rows);
        let p = bits.first().map_or(0, Vec::len);
        let all: Vec<usize> = (0..rows.len()).collect();
        let trees = (0..p)
            .into_par_iter()
            .map(|j| {
                let target: Vec<usize> = bits.iter().map(|b| usize::from(b[j])).collect();
                TreeBuilder::new(&columns, &target, 2).fit(&all, params, seed::derive(seed, &[j as u64]))
            })
            .collect();
        BinaryRelevance { trees }
    }

    pub(crate) fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub(crate) fn predict(&self, q: &[f64]) -> Vec<f64> {
        self.trees.iter().map(|t| t.predict_proba_row(q)[1]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weak_learners::tree::{Criterion, MaxFeatures};

    #[test]
    fn one_tree_per_label_and_constant_label() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let bits: Vec<Vec<bool>> = (0..20).map(|i| vec![true, i >= 10, false]).collect();
        let m = BinaryRelevance::fit(&rows, &bits, &TreeParams::new(Criterion::Gini, MaxFeatures::All), 3);
        assert_eq!(m.n_trees(), 3);
        for q in [[-4.0, 0.0], [3.0, 1.0], [15.0, 2.0]] {
            let s = m.predict(&q);
            assert_eq!(s[0], 1.0);
            assert_eq!(s[2], 0.0);
            assert_eq!(s[1], if q[0] >= 10.0 { 1.0 } else { 0.0 });
        }
    }
}
