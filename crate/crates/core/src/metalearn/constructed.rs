//! A synthetic meta-dataset whose labels are a known function of a single
//! meta-feature, for checking that meta-learners and importance recover it.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::metafeatures::META_FEATURE_NAMES;
use crate::modelzoo::{default_grid, LabelVector, MetaDataset, MetaInstance, ThresholdMode, DESK_ESTIMATORS};
use crate::seed;

/// Index of the meta-feature that determines the labels.
pub const DETERMINING_FEATURE: usize = 0;
/// Number of label blocks the determining feature's range is cut into.
pub const CONSTRUCTED_BLOCKS: usize = 3;

/// `n` instances over the 62 meta-feature names and the 24 desk-grid
/// labels. The determining feature is uniform on [0, 1); its tercile picks
/// which third of the labels is positive (accuracy 0.9 against 0.5 for the
/// rest). Features `1..=noise_features` are independent standard normals;
/// all remaining features are constant.
pub fn constructed_meta_dataset(n: usize, noise_features: usize, seed: u64) -> MetaDataset {
    let models = default_grid(DESK_ESTIMATORS.0, DESK_ESTIMATORS.1)
        .and_then(|g| g.models())
        .expect("default grid is valid");
    let p = models.len();
    let d = META_FEATURE_NAMES.len();
    let mut rng = seed::rng(seed);
    let instances = (0..n)
        .map(|i| {
            let mut features = vec![1.0; d];
            let x: f64 = rng.random();
            features[DETERMINING_FEATURE] = x;
            for f in features.iter_mut().skip(1).take(noise_features) {
                *f = StandardNormal.sample(&mut rng);
            }
            let block = ((x * CONSTRUCTED_BLOCKS as f64) as usize).min(CONSTRUCTED_BLOCKS - 1);
            let per = p / CONSTRUCTED_BLOCKS;
            let acc = (0..p).map(|j| if j / per == block { 0.9 } else { 0.5 }).collect();
            MetaInstance {
                dataset_id: format!("constructed_{i:05}"),
                features,
                labels: LabelVector::from_accuracies(acc, 0.01, ThresholdMode::Absolute).expect("finite accuracies"),
            }
        })
        .collect();
    MetaDataset::new(
        META_FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        models.iter().map(|m| m.name()).collect(),
        instances,
    )
    .expect("consistent schema")
}
