//! Multilabel meta-learners (MLkNN, binary relevance, RAkEL) that score
//! every model of the grid for a dataset, with hit-rate evaluation,
//! cross-validation, permutation importance and model persistence.

mod birel;
pub mod constructed;
pub mod container;
pub mod eval;
pub mod importance;
pub mod metrics;
mod mlknn;
mod rakel;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metafeatures::{extract_all, META_FEATURE_NAMES};
use crate::modelzoo::{Grid, MetaDataset, ModelId};
use crate::stats::Standardizer;
use crate::tabular::Dataset;
use crate::weak_learners::tree::{Criterion, MaxFeatures, TreeParams};

use birel::BinaryRelevance;
use mlknn::Mlknn;
use rakel::Rakel;

pub use constructed::{constructed_meta_dataset, DETERMINING_FEATURE};
pub use container::{load_model, save_model};
pub use eval::{cross_validate_meta, select_params, train_meta_learner, EvalReport, FoldReport};
pub use importance::{permutation_importance, FeatureImportance, ImportanceReport};
pub use metrics::{hit_rate, multilabel_metrics, random_hit_rate, MultilabelMetrics};
pub use rakel::default_model_count;

/// Laplace smoothing of MLkNN.
pub const MLKNN_SMOOTHING: f64 = 1.0;
/// MLkNN neighbor counts searched by default.
pub const MLKNN_K_VALUES: [usize; 4] = [3, 5, 7, 10];
/// RAkEL label subset size.
pub const RAKEL_SUBSET_SIZE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    Mlknn,
    Birel,
    Rakel,
}

impl LearnerKind {
    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::Mlknn => "mlknn",
            LearnerKind::Birel => "birel",
            LearnerKind::Rakel => "rakel",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mlknn" => Ok(LearnerKind::Mlknn),
            "birel" | "br" => Ok(LearnerKind::Birel),
            "rakel" => Ok(LearnerKind::Rakel),
            other => Err(Error::InvalidParameter(format!("unknown learner `{other}` (mlknn, birel, rakel)"))),
        }
    }
}

/// A meta-learner with one hyperparameter assignment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LearnerParams {
    Mlknn {
        k: usize,
        s: f64,
    },
    Birel {
        criterion: Criterion,
        max_features: MaxFeatures,
    },
    Rakel {
        subset_size: usize,
        /// `None` means ⌈2p / subset_size⌉.
        model_count: Option<usize>,
        criterion: Criterion,
        max_features: MaxFeatures,
    },
}

impl LearnerParams {
    pub fn kind(&self) -> LearnerKind {
        match self {
            LearnerParams::Mlknn { .. } => LearnerKind::Mlknn,
            LearnerParams::Birel { .. } => LearnerKind::Birel,
            LearnerParams::Rakel { .. } => LearnerKind::Rakel,
        }
    }
}

impl fmt::Display for LearnerParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LearnerParams::Mlknn { k, s } => write!(f, "mlknn(k={k}, s={s})"),
            LearnerParams::Birel {
                criterion,
                max_features,
            } => write!(f, "birel(criterion={}, max_features={})", criterion.name(), max_features.name()),
            LearnerParams::Rakel {
                subset_size,
                model_count,
                criterion,
                max_features,
            } => {
                let m = model_count.map_or("auto".to_string(), |m| m.to_string());
                write!(
                    f,
                    "rakel(subset_size={subset_size}, model_count={m}, criterion={}, max_features={})",
                    criterion.name(),
                    max_features.name()
                )
            }
        }
    }
}

/// A learner kind and the hyperparameter candidates searched for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub kind: LearnerKind,
    pub candidates: Vec<LearnerParams>,
}

impl LearnerConfig {
    /// The standard search space: k ∈ {3, 5, 7, 10} for MLkNN; criterion ∈
    /// {gini, entropy} × max_features ∈ {sqrt, log2} for the tree-based
    /// learners.
    pub fn default_for(kind: LearnerKind) -> Self {
        let criteria = [Criterion::Gini, Criterion::Entropy];
        let features = [MaxFeatures::Sqrt, MaxFeatures::Log2];
        LearnerConfig::new(kind, &MLKNN_K_VALUES, &criteria, &features, RAKEL_SUBSET_SIZE, None)
            .expect("default search space is non-empty")
    }

    /// Cartesian search space for `kind`; axes that do not apply are
    /// ignored.
    pub fn new(
        kind: LearnerKind,
        k_values: &[usize],
        criteria: &[Criterion],
        max_features: &[MaxFeatures],
        subset_size: usize,
        model_count: Option<usize>,
    ) -> Result<Self> {
        let mut candidates = Vec::new();
        match kind {
            LearnerKind::Mlknn => {
                for &k in k_values {
                    candidates.push(LearnerParams::Mlknn { k, s: MLKNN_SMOOTHING });
                }
            }
            LearnerKind::Birel | LearnerKind::Rakel => {
                for &criterion in criteria {
                    for &mf in max_features {
                        candidates.push(match kind {
                            LearnerKind::Birel => LearnerParams::Birel {
                                criterion,
                                max_features: mf,
                            },
                            _ => LearnerParams::Rakel {
                                subset_size,
                                model_count,
                                criterion,
                                max_features: mf,
                            },
                        });
                    }
                }
            }
        }
        if candidates.is_empty() {
            return Err(Error::InvalidParameter(format!("empty hyperparameter grid for {}", kind.name())));
        }
        Ok(LearnerConfig { kind, candidates })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Fitted {
    Mlknn(Mlknn),
    Birel(BinaryRelevance),
    Rakel(Rakel),
}

/// A fitted meta-learner with the schemas and standardization it was
/// trained with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaLearnerModel {
    pub params: LearnerParams,
    pub feature_schema: Vec<String>,
    pub label_schema: Vec<String>,
    /// Meta-feature means and stds of the training instances.
    pub standardizer: Standardizer,
    /// The model grid behind the labels, when known.
    pub grid: Option<Grid>,
    fitted: Fitted,
}

impl MetaLearnerModel {
    pub fn kind(&self) -> LearnerKind {
        self.params.kind()
    }

    pub fn n_labels(&self) -> usize {
        self.label_schema.len()
    }

    /// Number of fitted trees (one per label for binary relevance, one per
    /// member for RAkEL, none for MLkNN).
    pub fn tree_count(&self) -> usize {
        match &self.fitted {
            Fitted::Mlknn(_) => 0,
            Fitted::Birel(m) => m.n_trees(),
            Fitted::Rakel(m) => m.subsets().len(),
        }
    }

    /// The label subsets of a RAkEL model.
    pub fn label_subsets(&self) -> Option<Vec<Vec<usize>>> {
        match &self.fitted {
            Fitted::Rakel(m) => Some(m.subsets()),
            _ => None,
        }
    }

    /// Per-label scores in [0, 1] for one raw (unstandardized) meta-feature
    /// vector.
    pub fn predict_scores(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.feature_schema.len() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} meta-features, got {}",
                self.feature_schema.len(),
                features.len()
            )));
        }
        let q = self.standardizer.transform_row(features);
        Ok(match &self.fitted {
            Fitted::Mlknn(m) => m.predict(&q),
            Fitted::Birel(m) => m.predict(&q),
            Fitted::Rakel(m) => m.predict(&q),
        })
    }

    pub fn predict_scores_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.par_iter().map(|r| self.predict_scores(r)).collect()
    }

    /// Fails unless `md` has this model's feature and label schemas.
    pub fn check_schema(&self, md: &MetaDataset) -> Result<()> {
        if md.feature_names != self.feature_schema {
            return Err(Error::SchemaMismatch("meta-feature columns differ from the model's".into()));
        }
        if md.label_names != self.label_schema {
            return Err(Error::SchemaMismatch(format!(
                "meta-dataset has {} labels, model has {}",
                md.label_names.len(),
                self.label_schema.len()
            )));
        }
        Ok(())
    }

    /// Fails unless the grid's models are exactly this model's labels.
    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        let names: Vec<String> = grid.models()?.iter().map(ModelId::name).collect();
        if names != self.label_schema {
            return Err(Error::SchemaMismatch(format!(
                "grid has {} models, the meta-learner was trained on {} labels",
                names.len(),
                self.label_schema.len()
            )));
        }
        Ok(())
    }

    /// Attaches the grid the labels came from, after checking it matches.
    pub fn with_grid(mut self, grid: Grid) -> Result<Self> {
        self.check_grid(&grid)?;
        self.grid = Some(grid);
        Ok(self)
    }
}

/// Fits `params` on `md`; seeds only matter for the tree-based learners.
pub fn fit_learner(md: &MetaDataset, params: &LearnerParams, seed: u64) -> Result<MetaLearnerModel> {
    if md.is_empty() {
        return Err(Error::InvalidDataset("meta-dataset has no instances".into()));
    }
    if md.n_labels() == 0 {
        return Err(Error::InvalidDataset("meta-dataset has no labels".into()));
    }
    let raw = md.feature_rows();
    let standardizer = Standardizer::fit(&Matrix::from_rows(&raw));
    let rows: Vec<Vec<f64>> = raw.iter().map(|r| standardizer.transform_row(r)).collect();
    let bits = md.label_bits();
    let tree = |criterion, max_features| TreeParams::new(criterion, max_features);
    let fitted = match *params {
        LearnerParams::Mlknn { k, s } => Fitted::Mlknn(Mlknn::fit(rows, bits, k, s)?),
        LearnerParams::Birel {
            criterion,
            max_features,
        } => Fitted::Birel(BinaryRelevance::fit(&rows, &bits, &tree(criterion, max_features), seed)),
        LearnerParams::Rakel {
            subset_size,
            model_count,
            criterion,
            max_features,
        } => {
            let m = model_count.unwrap_or_else(|| default_model_count(md.n_labels(), subset_size));
            Fitted::Rakel(Rakel::fit(&rows, &bits, subset_size, m, &tree(criterion, max_features), seed)?)
        }
    };
    Ok(MetaLearnerModel {
        params: *params,
        feature_schema: md.feature_names.clone(),
        label_schema: md.label_names.clone(),
        standardizer,
        grid: None,
        fitted,
    })
}

pub fn fit_mlknn(md: &MetaDataset, k: usize, s: f64) -> Result<MetaLearnerModel> {
    fit_learner(md, &LearnerParams::Mlknn { k, s }, 0)
}

pub fn fit_binary_relevance(md: &MetaDataset, criterion: Criterion, max_features: MaxFeatures, seed: u64) -> Result<MetaLearnerModel> {
    fit_learner(
        md,
        &LearnerParams::Birel {
            criterion,
            max_features,
        },
        seed,
    )
}

pub fn fit_rakel(
    md: &MetaDataset,
    subset_size: usize,
    model_count: Option<usize>,
    criterion: Criterion,
    max_features: MaxFeatures,
    seed: u64,
) -> Result<MetaLearnerModel> {
    fit_learner(
        md,
        &LearnerParams::Rakel {
            subset_size,
            model_count,
            criterion,
            max_features,
        },
        seed,
    )
}

/// One entry of a recommendation list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub rank: usize,
    pub name: String,
    /// The full model description, when the meta-learner carries its grid.
    pub model: Option<ModelId>,
    pub score: f64,
}

/// Label indices by descending score, ties to the lower index.
pub fn rank_scores(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Scores every model of the grid for `ds`: extracts its meta-features with
/// `seed`, standardizes them with the model's statistics and ranks all
/// labels by score (ties by grid position).
pub fn recommend(model: &MetaLearnerModel, ds: &Dataset, seed: u64) -> Result<Vec<Recommendation>> {
    if model.feature_schema.iter().map(String::as_str).ne(META_FEATURE_NAMES.iter().copied()) {
        return Err(Error::SchemaMismatch("model was not trained on the standard meta-features".into()));
    }
    let models = match &model.grid {
        Some(g) => {
            model.check_grid(g)?;
            Some(g.models()?)
        }
        None => None,
    };
    let mf = extract_all(ds, seed)?;
    let scores = model.predict_scores(mf.values())?;
    Ok(rank_scores(&scores)
        .into_iter()
        .enumerate()
        .map(|(rank, j)| Recommendation {
            rank: rank + 1,
            name: model.label_schema[j].clone(),
            model: models.as_ref().map(|m| m[j].clone()),
            score: scores[j],
        })
        .collect())
}
