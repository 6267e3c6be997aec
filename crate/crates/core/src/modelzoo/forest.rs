//! Random forest: bootstrap-sampled CART trees with per-node feature
//! subsampling, combined by majority vote.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::stats::majority;
use crate::tabular::Dataset;
use crate::weak_learners::tree::{Criterion, MaxFeatures, TreeBuilder, TreeModel, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfParams {
    pub criterion: Criterion,
    pub max_features: MaxFeatures,
    pub n_estimators: usize,
    /// Draw a bootstrap sample per tree (otherwise every tree sees all rows).
    pub bootstrap: bool,
}

impl RfParams {
    pub fn new(criterion: Criterion, max_features: MaxFeatures, n_estimators: usize) -> Self {
        RfParams {
            criterion,
            max_features,
            n_estimators,
            bootstrap: true,
        }
    }
}

/// A fitted forest. Tree `t` depends only on `(seed, t)`, so the first `m`
/// trees of a forest are exactly the forest fitted with `n_estimators = m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<TreeModel>,
    class_count: usize,
}

pub fn fit_random_forest(train: &Dataset, params: &RfParams, seed: u64) -> RandomForest {
    let columns = train.features().columns();
    let builder = TreeBuilder::new(&columns, train.target(), train.class_count()).presort();
    let tree_params = TreeParams::new(params.criterion, params.max_features);
    let n = train.n_rows();
    let all: Vec<usize> = (0..n).collect();
    let trees = (0..params.n_estimators)
        .map(|t| {
            let rows: Vec<usize> = if params.bootstrap {
                let mut rng = seed::rng(seed::derive(seed, &[t as u64, 0]));
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                all.clone()
            };
            builder.fit(&rows, &tree_params, seed::derive(seed, &[t as u64, 1]))
        })
        .collect();
    RandomForest {
        trees,
        class_count: train.class_count(),
    }
}

impl RandomForest {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Majority vote of all trees; ties go to the smallest class index.
    pub fn predict(&self, x: &crate::matrix::Matrix) -> Vec<usize> {
        self.predict_prefixes(x, &[self.trees.len()]).pop().unwrap()
    }

    /// Predictions of the sub-forests made of the first `m` trees, for each
    /// `m` in `sizes` (ascending, each at most the forest size).
    pub fn predict_prefixes(&self, x: &crate::matrix::Matrix, sizes: &[usize]) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::with_capacity(x.rows()); sizes.len()];
        let mut votes = vec![0usize; self.class_count];
        for row in x.iter_rows() {
            votes.iter_mut().for_each(|v| *v = 0);
            let mut done = 0;
            for (s, &m) in sizes.iter().enumerate() {
                for tree in &self.trees[done..m] {
                    votes[tree.predict_row(row)] += 1;
                }
                done = m;
                out[s].push(majority(&votes));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::stats::accuracy;

    fn blobs(n: usize, seed: u64) -> Dataset {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = seed::rng(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let c = (i % 2) as f64 * 4.0;
                (0..3).map(|_| c + <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)).collect()
            })
            .collect();
        Dataset::from_columns(&Matrix::from_rows(&rows).columns(), (0..n).map(|i| i % 2).collect(), 2).unwrap()
    }

    #[test]
    fn separable_blobs() {
        let (train, test) = (blobs(200, 1), blobs(200, 2));
        let rf = fit_random_forest(&train, &RfParams::new(Criterion::Gini, MaxFeatures::Sqrt, 50), 3);
        assert!(accuracy(&rf.predict(test.features()), test.target()) >= 0.95);
        assert_eq!(fit_random_forest(&train, &RfParams::new(Criterion::Gini, MaxFeatures::Sqrt, 50), 3), rf);
    }

    #[test]
    fn single_full_tree_memorizes() {
        let train = blobs(60, 4);
        let mut p = RfParams::new(Criterion::Entropy, MaxFeatures::All, 1);
        p.bootstrap = false;
        let rf = fit_random_forest(&train, &p, 0);
        assert_eq!(accuracy(&rf.predict(train.features()), train.target()), 1.0);
    }

    #[test]
    fn prefix_equals_smaller_forest() {
        let (train, test) = (blobs(100, 5), blobs(50, 6));
        let big = fit_random_forest(&train, &RfParams::new(Criterion::Gini, MaxFeatures::Log2, 12), 9);
        let small = fit_random_forest(&train, &RfParams::new(Criterion::Gini, MaxFeatures::Log2, 5), 9);
        let staged = big.predict_prefixes(test.features(), &[5, 12]);
        assert_eq!(staged[0], small.predict(test.features()));
        assert_eq!(staged[1], big.predict(test.features()));
    }
}
