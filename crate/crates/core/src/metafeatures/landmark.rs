//! Landmarking meta-features: cross-validated accuracy of four weak learners
//! and the shape of a decision tree fitted on all rows.

use crate::error::{Error, Result};
use crate::seed;
use crate::stats::Summary;
use crate::tabular::Dataset;
use crate::weak_learners::cv::{cross_val_accuracy, LearnerFamily, LearnerSpec};
use crate::weak_learners::tree::{fit_tree, Criterion, MaxFeatures};

/// Preferred fold count of the landmark cross-validation.
pub const LANDMARK_FOLDS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Landmarks {
    pub one_nn: f64,
    pub lda: f64,
    pub nb: f64,
    pub dt: f64,
    pub dt_leaves: f64,
    pub dt_depth: f64,
    pub gini: Summary,
}

/// Folds used for a dataset: five, or fewer when the smallest present class
/// is smaller than that.
pub fn landmark_folds(ds: &Dataset) -> Result<usize> {
    let smallest = ds.class_counts().into_iter().filter(|&c| c > 0).min().unwrap_or(0);
    let k = LANDMARK_FOLDS.min(smallest);
    if k < 2 {
        return Err(Error::ClassTooSmall {
            class: ds
                .class_counts()
                .iter()
                .position(|&c| c == smallest)
                .unwrap_or(0),
            count: smallest,
            required: 2,
        });
    }
    Ok(k)
}

pub fn landmark_features(ds: &Dataset, seed: u64) -> Result<Landmarks> {
    let k = landmark_folds(ds)?;
    let cv_seed = seed::derive(seed, &[0]);
    let acc = |family| cross_val_accuracy(&LearnerSpec::of(family), ds, k, cv_seed);
    let one_nn = acc(LearnerFamily::OneNn)?;
    let lda = acc(LearnerFamily::Lda)?;
    let nb = acc(LearnerFamily::GaussianNb)?;
    let dt = acc(LearnerFamily::DecisionTree)?;
    let tree = fit_tree(ds, Criterion::Gini, MaxFeatures::All, seed::derive(seed, &[1]));
    Ok(Landmarks {
        one_nn,
        lda,
        nb,
        dt,
        dt_leaves: tree.leaf_count() as f64,
        dt_depth: tree.depth() as f64,
        gini: Summary::of(tree.gini_importances()),
    })
}
