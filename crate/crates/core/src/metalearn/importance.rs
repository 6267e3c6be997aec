//! Permutation importance of meta-features for a fitted meta-learner.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::hit_rate;
use super::MetaLearnerModel;
use crate::error::{Error, Result};
use crate::modelzoo::MetaDataset;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub name: String,
    /// Mean over repeats of baseline hit rate minus shuffled hit rate.
    pub mean_drop: f64,
    /// Population std of the drops (0 for a single repeat).
    pub std_drop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub baseline_hit_rate: f64,
    pub repeats: usize,
    pub seed: u64,
    pub n_instances: usize,
    /// In feature-schema order.
    pub features: Vec<FeatureImportance>,
    /// Feature names by descending mean drop, ties by name.
    pub ranking: Vec<String>,
}

/// Shuffles one meta-feature column at a time (repeat `r` of feature `j`
/// uses `derive(seed, [j, r])`) and records the hit-rate drop.
pub fn permutation_importance(model: &MetaLearnerModel, md: &MetaDataset, repeats: usize, seed: u64) -> Result<ImportanceReport> {
    model.check_schema(md)?;
    if repeats == 0 {
        return Err(Error::InvalidParameter("repeats must be at least 1".into()));
    }
    if md.is_empty() {
        return Err(Error::InvalidDataset("meta-dataset has no instances".into()));
    }
    let rows = md.feature_rows();
    let truth = md.label_bits();
    let baseline = hit_rate(&model.predict_scores_batch(&rows)?, &truth)?;
    let features: Vec<FeatureImportance> = md
        .feature_names
        .par_iter()
        .enumerate()
        .map(|(j, name)| -> Result<FeatureImportance> {
            let column: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let mut shuffled_rows = rows.clone();
            let mut drops = Vec::with_capacity(repeats);
            for r in 0..repeats {
                let mut col = column.clone();
                col.shuffle(&mut seed::rng(seed::derive(seed, &[j as u64, r as u64])));
                for (row, v) in shuffled_rows.iter_mut().zip(&col) {
                    row[j] = *v;
                }
                let scores: Vec<Vec<f64>> = shuffled_rows.iter().map(|q| model.predict_scores(q)).collect::<Result<_>>()?;
                drops.push(baseline - hit_rate(&scores, &truth)?);
            }
            let mean = drops.iter().sum::<f64>() / repeats as f64;
            let var = drops.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / repeats as f64;
            Ok(FeatureImportance {
                name: name.clone(),
                mean_drop: mean,
                std_drop: var.sqrt(),
            })
        })
        .collect::<Result<_>>()?;
    let mut order: Vec<&FeatureImportance> = features.iter().collect();
    order.sort_by(|a, b| b.mean_drop.total_cmp(&a.mean_drop).then_with(|| a.name.cmp(&b.name)));
    let ranking = order.iter().map(|f| f.name.clone()).collect();
    Ok(ImportanceReport {
        baseline_hit_rate: baseline,
        repeats,
        seed,
        n_instances: md.len(),
        features,
        ranking,
    })
}
