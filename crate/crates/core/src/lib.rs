//! Dataset meta-features, synthetic classification problems, grid-search
//! labeling of candidate models and multilabel meta-learners that recommend
//! a model for a new dataset.

pub mod error;
pub mod matrix;
pub mod metafeatures;
pub mod metalearn;
pub mod modelzoo;
pub mod seed;
pub mod stats;
pub mod synthgen;
pub mod tabular;
pub mod weak_learners;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use metafeatures::{extract_all, MetaFeatureVector, META_FEATURE_NAMES};
pub use tabular::{load_csv, split, stratified_folds, Dataset, FoldPlan, SplitPair};
