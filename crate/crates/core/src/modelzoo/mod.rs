//! Candidate models (random forest and gradient boosting), the model grid,
//! and grid-search labeling of datasets.

pub mod forest;
pub mod gbm;
pub mod meta;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::stats::accuracy;
use crate::tabular::{split, Dataset};
use crate::weak_learners::tree::{Criterion, MaxFeatures};

pub use forest::{fit_random_forest, RandomForest, RfParams};
pub use gbm::{fit_gbm, fit_gbm_staged, Boosting, Gbm, GbmParams};
pub use meta::{build_meta_dataset, extract_corpus, label_corpus, BuildSummary, MetaDataset, MetaInstance};

/// Fraction of each dataset held out to score the grid.
pub const VALIDATION_FRACTION: f64 = 0.2;
/// Default labeling threshold (absolute accuracy difference).
pub const DEFAULT_THRESHOLD: f64 = 0.01;
/// Slack absorbing rounding in accuracy comparisons.
const THRESHOLD_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    RF,
    GBM,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::RF => "RF",
            Family::GBM => "GBM",
        }
    }
}

/// One candidate model: a family with a full parameter assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelId {
    pub family: Family,
    pub params: BTreeMap<String, String>,
    pub grid_index: usize,
    /// Position within its family block, used in the model's name.
    pub family_index: usize,
}

impl ModelId {
    /// Short name such as `RF_03` or `GBM_11`.
    pub fn name(&self) -> String {
        format!("{}_{:02}", self.family.name(), self.family_index)
    }

    pub fn config(&self) -> Result<ModelConfig> {
        let get = |k: &str| {
            self.params
                .get(k)
                .ok_or_else(|| Error::InvalidParameter(format!("{} lacks parameter `{k}`", self.name())))
        };
        let n_estimators: usize = get("n_estimators")?
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("{}: bad n_estimators", self.name())))?;
        let allowed: &[&str] = match self.family {
            Family::RF => &["criterion", "max_features", "n_estimators"],
            Family::GBM => &["boosting", "learning_rate", "n_estimators"],
        };
        if let Some(k) = self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::InvalidParameter(format!("{}: unknown parameter `{k}`", self.name())));
        }
        Ok(match self.family {
            Family::RF => ModelConfig::Rf(RfParams::new(
                Criterion::parse(get("criterion")?)?,
                MaxFeatures::parse(get("max_features")?)?,
                n_estimators,
            )),
            Family::GBM => {
                let lr: f64 = get("learning_rate")?
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("{}: bad learning_rate", self.name())))?;
                ModelConfig::Gbm(GbmParams::new(Boosting::parse(get("boosting")?)?, lr, n_estimators))
            }
        })
    }

    /// Family and parameters other than the estimator count; models sharing
    /// this key are prefixes of one fitted ensemble.
    fn stage_key(&self) -> String {
        let rest: Vec<String> = self
            .params
            .iter()
            .filter(|(k, _)| k.as_str() != "n_estimators")
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        format!("{}({})", self.family.name(), rest.join(","))
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{} {}({})", self.name(), self.family.name(), p.join(", "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelConfig {
    Rf(RfParams),
    Gbm(GbmParams),
}

/// One grid axis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyGrid {
    pub family: Family,
    pub axes: Vec<Axis>,
}

/// A model grid: per family, the Cartesian product of its axes (last axis
/// varying fastest), families in listed order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    /// Estimator profile label, e.g. `desk` (50/100) or `full` (500/1000).
    pub profile: String,
    pub families: Vec<FamilyGrid>,
}

fn axis(name: &str, values: &[&str]) -> Axis {
    Axis {
        name: name.to_string(),
        values: values.iter().map(|v| v.to_string()).collect(),
    }
}

/// Estimator counts of the full-scale profile.
pub const FULL_ESTIMATORS: (usize, usize) = (500, 1000);
/// Estimator counts of the desk profile.
pub const DESK_ESTIMATORS: (usize, usize) = (50, 100);

/// The 24-model grid: RF over criterion × max_features × n_estimators, then
/// GBM over boosting × learning_rate × n_estimators.
pub fn default_grid(e1: usize, e2: usize) -> Result<Grid> {
    if e1 == 0 || e1 >= e2 {
        return Err(Error::InvalidParameter(format!("estimator counts must satisfy 0 < E1 < E2, got {e1}, {e2}")));
    }
    let (s1, s2) = (e1.to_string(), e2.to_string());
    let profile = match (e1, e2) {
        FULL_ESTIMATORS => "full".to_string(),
        DESK_ESTIMATORS => "desk".to_string(),
        _ => format!("custom-{e1}-{e2}"),
    };
    Ok(Grid {
        profile,
        families: vec![
            FamilyGrid {
                family: Family::RF,
                axes: vec![
                    axis("criterion", &["gini", "entropy"]),
                    axis("max_features", &["sqrt", "log2", "all"]),
                    axis("n_estimators", &[&s1, &s2]),
                ],
            },
            FamilyGrid {
                family: Family::GBM,
                axes: vec![
                    axis("boosting", &["standard", "dart"]),
                    axis("learning_rate", &["0.1", "0.05", "0.01"]),
                    axis("n_estimators", &[&s1, &s2]),
                ],
            },
        ],
    })
}

impl Grid {
    /// All models in canonical order, with validated parameters.
    pub fn models(&self) -> Result<Vec<ModelId>> {
        let mut out = Vec::new();
        for fg in &self.families {
            let sizes: Vec<usize> = fg.axes.iter().map(|a| a.values.len()).collect();
            if sizes.iter().any(|&s| s == 0) {
                return Err(Error::InvalidParameter(format!("{} grid has an empty axis", fg.family.name())));
            }
            let total: usize = sizes.iter().product();
            for local in 0..total {
                let mut rem = local;
                let mut params = BTreeMap::new();
                for (a, &s) in fg.axes.iter().zip(&sizes).rev() {
                    params.insert(a.name.clone(), a.values[rem % s].clone());
                    rem /= s;
                }
                let m = ModelId {
                    family: fg.family,
                    params,
                    grid_index: out.len(),
                    family_index: local,
                };
                m.config()?;
                out.push(m);
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidParameter("grid has no models".into()));
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("grid serializes")
    }

    pub fn from_json(s: &str) -> Result<Grid> {
        let g: Grid = serde_json::from_str(s)?;
        g.models()?;
        Ok(g)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Grid> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Grid::from_json(&s)
    }
}

/// How the labeling threshold compares with the best accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMode {
    /// Positive when `acc ≥ best − threshold`.
    Absolute,
    /// Positive when `acc ≥ best · (1 − threshold)`.
    Relative,
}

impl ThresholdMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "absolute" => Ok(ThresholdMode::Absolute),
            "relative" => Ok(ThresholdMode::Relative),
            other => Err(Error::InvalidParameter(format!("unknown threshold mode `{other}`"))),
        }
    }
}

/// Near-optimal models of one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelVector {
    pub bits: Vec<bool>,
    pub best_accuracy: f64,
    pub accuracies: Vec<f64>,
}

impl LabelVector {
    pub fn from_accuracies(accuracies: Vec<f64>, threshold: f64, mode: ThresholdMode) -> Result<Self> {
        if accuracies.is_empty() || accuracies.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidParameter("accuracies must be non-empty and finite".into()));
        }
        if !(threshold >= 0.0 && threshold.is_finite()) {
            return Err(Error::InvalidParameter(format!("threshold {threshold} must be non-negative")));
        }
        let best = accuracies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let cut = match mode {
            ThresholdMode::Absolute => best - threshold,
            ThresholdMode::Relative => best * (1.0 - threshold),
        } - THRESHOLD_SLACK;
        let bits = accuracies.iter().map(|&a| a >= cut).collect();
        Ok(LabelVector {
            bits,
            best_accuracy: best,
            accuracies,
        })
    }

    pub fn positives(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Validation accuracy of every model, fitting each ensemble once at its
/// largest estimator count and scoring the smaller counts as prefixes.
/// Models sharing all parameters but `n_estimators` share the seed
/// `derive(seed, [hash(family and other parameters)])`.
pub fn evaluate_grid(train: &Dataset, validation: &Dataset, models: &[ModelId], seed: u64) -> Result<Vec<f64>> {
    let mut groups: BTreeMap<String, Vec<(usize, usize)>> = BTreeMap::new();
    let mut configs = Vec::with_capacity(models.len());
    for (pos, m) in models.iter().enumerate() {
        let cfg = m.config()?;
        let n = match cfg {
            ModelConfig::Rf(p) => p.n_estimators,
            ModelConfig::Gbm(p) => p.n_estimators,
        };
        groups.entry(m.stage_key()).or_default().push((pos, n));
        configs.push(cfg);
    }
    let groups: Vec<(String, Vec<(usize, usize)>)> = groups.into_iter().collect();
    let scored: Vec<Vec<(usize, f64)>> = groups
        .par_iter()
        .map(|(key, members)| {
            let mut members = members.clone();
            members.sort_by_key(|&(pos, n)| (n, pos));
            let stages: Vec<usize> = members.iter().map(|&(_, n)| n).collect();
            let group_seed = seed::derive(seed, &[seed::hash_str(key)]);
            let preds: Vec<Vec<usize>> = match configs[members[0].0] {
                ModelConfig::Rf(mut p) => {
                    p.n_estimators = *stages.last().unwrap();
                    fit_random_forest(train, &p, group_seed).predict_prefixes(validation.features(), &stages)
                }
                ModelConfig::Gbm(mut p) => {
                    p.n_estimators = *stages.last().unwrap();
                    fit_gbm_staged(train, &p, group_seed, &stages)?
                        .iter()
                        .map(|m| m.predict(validation.features()))
                        .collect()
                }
            };
            Ok(members
                .iter()
                .zip(preds)
                .map(|(&(pos, _), p)| (pos, accuracy(&p, validation.target())))
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut acc = vec![0.0; models.len()];
    for (pos, a) in scored.into_iter().flatten() {
        acc[pos] = a;
    }
    Ok(acc)
}

/// Splits 80/20 (stratified), scores every grid model on the validation
/// part and marks the models within `threshold` of the best.
pub fn label_dataset(ds: &Dataset, models: &[ModelId], threshold: f64, mode: ThresholdMode, seed: u64) -> Result<LabelVector> {
    let parts = split(ds, VALIDATION_FRACTION, seed::derive(seed, &[0]))?;
    let acc = evaluate_grid(&parts.train, &parts.validation, models, seed::derive(seed, &[1]))?;
    LabelVector::from_accuracies(acc, threshold, mode)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_layout() {
        let g = default_grid(500, 1000).unwrap();
        let m = g.models().unwrap();
        assert_eq!(m.len(), 24);
        assert!(m[..12].iter().all(|x| x.family == Family::RF));
        assert_eq!(m[0].name(), "RF_00");
        assert_eq!(m[23].name(), "GBM_11");
        assert_eq!(m[1].params["n_estimators"], "1000");
        assert_eq!(m[2].params["max_features"], "log2");
        assert_eq!(m[6].params["criterion"], "entropy");
        assert!((0..24).all(|i| m[i].grid_index == i));
        assert!(default_grid(5, 5).is_err());
        assert_eq!(Grid::from_json(&g.to_json()).unwrap(), g);
    }

    #[test]
    fn threshold_rule() {
        let l = LabelVector::from_accuracies(vec![0.90, 0.895, 0.88], 0.01, ThresholdMode::Absolute).unwrap();
        assert_eq!(l.bits, vec![true, true, false]);
        let l = LabelVector::from_accuracies(vec![0.5; 24], 0.01, ThresholdMode::Absolute).unwrap();
        assert_eq!(l.positives(), 24);
        // 0.89 is exactly one point below 0.90 despite binary rounding
        let l = LabelVector::from_accuracies(vec![0.90, 0.89], 0.01, ThresholdMode::Absolute).unwrap();
        assert_eq!(l.bits, vec![true, true]);
    }
}
