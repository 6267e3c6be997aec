//! Small self-contained learners used for landmarking and as ensemble
//! building blocks.

pub mod cv;
pub mod fcm;
pub mod knn;
pub mod lda;
pub mod lof;
pub mod naive_bayes;
pub mod tree;

pub use cv::{cross_val_accuracy, LearnerFamily, LearnerSpec};
pub use fcm::{fuzzy_cmeans, MembershipMatrix};
pub use knn::{k_nearest, knn_classify, knn_graph};
pub use lda::{fit_lda, Lda};
pub use lof::lof_scores;
pub use naive_bayes::{fit_gaussian_nb, GaussianNb};
pub use tree::{fit_tree, Criterion, MaxFeatures, TreeModel};
