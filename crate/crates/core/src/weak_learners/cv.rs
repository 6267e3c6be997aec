use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::stats::{accuracy, Standardizer};
use crate::tabular::{stratified_folds, Dataset};
use crate::weak_learners::knn::knn_predict;
use crate::weak_learners::lda::{fit_lda, DEFAULT_SHRINKAGE};
use crate::weak_learners::naive_bayes::fit_gaussian_nb;
use crate::weak_learners::tree::{Criterion, MaxFeatures, TreeBuilder, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LearnerFamily {
    OneNn,
    Lda,
    GaussianNb,
    DecisionTree,
}

impl LearnerFamily {
    fn allowed_keys(self) -> &'static [&'static str] {
        match self {
            LearnerFamily::OneNn => &["k"],
            LearnerFamily::Lda => &["shrinkage"],
            LearnerFamily::GaussianNb => &[],
            LearnerFamily::DecisionTree => &["criterion", "max_features"],
        }
    }

    /// Distance- and covariance-based learners see z-scored features.
    fn standardizes(self) -> bool {
        matches!(self, LearnerFamily::OneNn | LearnerFamily::Lda)
    }
}

/// A landmarking learner with validated parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    family: LearnerFamily,
    params: BTreeMap<String, String>,
}

impl LearnerSpec {
    pub fn new(family: LearnerFamily, params: BTreeMap<String, String>) -> Result<Self> {
        let spec = LearnerSpec { family, params };
        for key in spec.params.keys() {
            if !family.allowed_keys().contains(&key.as_str()) {
                return Err(Error::InvalidParameter(format!("{family:?} does not take parameter `{key}`")));
            }
        }
        spec.neighbors()?;
        spec.shrinkage()?;
        spec.tree_params()?;
        Ok(spec)
    }

    pub fn of(family: LearnerFamily) -> Self {
        LearnerSpec {
            family,
            params: BTreeMap::new(),
        }
    }

    pub fn family(&self) -> LearnerFamily {
        self.family
    }

    fn neighbors(&self) -> Result<usize> {
        match self.params.get("k") {
            None => Ok(1),
            Some(v) => match v.parse::<usize>() {
                Ok(k) if k >= 1 => Ok(k),
                _ => Err(Error::InvalidParameter(format!("k = `{v}` must be a positive integer"))),
            },
        }
    }

    fn shrinkage(&self) -> Result<f64> {
        match self.params.get("shrinkage") {
            None => Ok(DEFAULT_SHRINKAGE),
            Some(v) => match v.parse::<f64>() {
                Ok(s) if (0.0..=1.0).contains(&s) => Ok(s),
                _ => Err(Error::InvalidParameter(format!("shrinkage `{v}` not in [0, 1]"))),
            },
        }
    }

    fn tree_params(&self) -> Result<TreeParams> {
        let criterion = self.params.get("criterion").map_or(Ok(Criterion::Gini), |v| Criterion::parse(v))?;
        let max_features = self
            .params
            .get("max_features")
            .map_or(Ok(MaxFeatures::All), |v| MaxFeatures::parse(v))?;
        Ok(TreeParams::new(criterion, max_features))
    }

    /// Fits on `train` and predicts `test`.
    pub fn fit_predict(&self, train: &Dataset, test: &Dataset, seed: u64) -> Result<Vec<usize>> {
        let (train, test) = if self.family.standardizes() {
            let z = Standardizer::fit(train.features());
            (
                train.with_features(z.transform(train.features())),
                test.with_features(z.transform(test.features())),
            )
        } else {
            (train.clone(), test.clone())
        };
        match self.family {
            LearnerFamily::OneNn => knn_predict(
                train.features(),
                train.target(),
                train.class_count(),
                test.features(),
                self.neighbors()?.min(train.n_rows()),
            ),
            LearnerFamily::Lda => {
                let mut shrinkage = self.shrinkage()?;
                loop {
                    match fit_lda(&train, shrinkage) {
                        Ok(m) => return Ok(m.predict(test.features())),
                        Err(Error::SingularCovariance { .. }) if shrinkage < 1.0 => {
                            shrinkage = (shrinkage.max(1e-6) * 10.0).min(1.0);
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
            LearnerFamily::GaussianNb => Ok(fit_gaussian_nb(&train).predict(test.features())),
            LearnerFamily::DecisionTree => {
                let cols = train.features().columns();
                let rows: Vec<usize> = (0..train.n_rows()).collect();
                let tree = TreeBuilder::new(&cols, train.target(), train.class_count()).fit(&rows, &self.tree_params()?, seed);
                Ok(tree.predict(test.features()))
            }
        }
    }
}

/// Unweighted mean of per-fold holdout accuracies over a stratified k-fold
/// plan.
pub fn cross_val_accuracy(spec: &LearnerSpec, ds: &Dataset, k: usize, seed: u64) -> Result<f64> {
    let plan = stratified_folds(ds, k, seed)?;
    let mut total = 0.0;
    for fold in 0..k {
        let (train_rows, test_rows) = plan.fold_rows(fold);
        let train = ds.select(&train_rows);
        let test = ds.select(&test_rows);
        let pred = spec.fit_predict(&train, &test, seed::derive(seed, &[fold as u64]))?;
        total += accuracy(&pred, test.target());
    }
    Ok(total / k as f64)
}
