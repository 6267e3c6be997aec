//! Nested cross-validation of meta-learners.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{hit_rate, multilabel_metrics, random_hit_rate, threshold_scores};
use super::{fit_learner, LearnerConfig, LearnerKind, LearnerParams, MetaLearnerModel};
use crate::error::{Error, Result};
use crate::modelzoo::MetaDataset;
use crate::seed;

/// Share of a training set held out to pick hyperparameters.
pub const INNER_VALIDATION_FRACTION: f64 = 0.2;

/// Test metrics of one outer fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Hyperparameters chosen by the inner search.
    pub selected: LearnerParams,
    pub hit_rate: f64,
    /// Expected hit rate of a uniformly random pick on the test instances.
    pub baseline_hit_rate: f64,
    pub hamming_loss: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_specificity: f64,
    pub macro_f1: f64,
}

/// Cross-validated metrics; every averaged field is the unweighted mean of
/// the per-fold values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub learner: LearnerKind,
    pub fold_count: usize,
    pub seed: u64,
    pub n_instances: usize,
    pub hit_rate: f64,
    pub baseline_hit_rate: f64,
    pub hamming_loss: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_specificity: f64,
    pub macro_f1: f64,
    pub per_fold: Vec<FoldReport>,
}

fn shuffled(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::rng(seed));
    idx
}

/// Picks the candidate with the best hit rate on a shuffled 80/20 split of
/// `md` (split from `derive(seed, [0])`, fits from `derive(seed, [1])`).
/// Ties go to the earlier candidate; candidates that cannot be fitted on the
/// split (e.g. k too large) are skipped.
pub fn select_params(md: &MetaDataset, config: &LearnerConfig, seed: u64) -> Result<(LearnerParams, Option<f64>)> {
    let Some(first) = config.candidates.first() else {
        return Err(Error::InvalidParameter("empty hyperparameter grid".into()));
    };
    if config.candidates.len() == 1 {
        return Ok((*first, None));
    }
    let n = md.len();
    if n < 2 {
        return Err(Error::InvalidDataset(format!("{n} meta-instances are too few for a validation split")));
    }
    let order = shuffled(n, seed::derive(seed, &[0]));
    let n_val = ((n as f64 * INNER_VALIDATION_FRACTION).round() as usize).clamp(1, n - 1);
    let (val, train) = order.split_at(n_val);
    let (train, val) = (md.subset(train), md.subset(val));
    let truth = val.label_bits();
    let fit_seed = seed::derive(seed, &[1]);
    let scored: Vec<Result<f64>> = config
        .candidates
        .par_iter()
        .map(|c| {
            let model = fit_learner(&train, c, fit_seed)?;
            hit_rate(&model.predict_scores_batch(&val.feature_rows())?, &truth)
        })
        .collect();
    let mut best: Option<(LearnerParams, f64)> = None;
    let mut last_err = None;
    for (c, r) in config.candidates.iter().zip(scored) {
        match r {
            Ok(h) if best.is_none_or(|(_, b)| h > b) => best = Some((*c, h)),
            Ok(_) => {}
            Err(e) => last_err = Some(e),
        }
    }
    match best {
        Some((p, h)) => Ok((p, Some(h))),
        None => Err(last_err.expect("some candidate ran")),
    }
}

/// Selects hyperparameters on `md` and refits them on all of it
/// (selection seed `derive(seed, [0])`, fit seed `derive(seed, [1])`).
pub fn train_meta_learner(md: &MetaDataset, config: &LearnerConfig, seed: u64) -> Result<MetaLearnerModel> {
    let (params, _) = select_params(md, config, seed::derive(seed, &[0]))?;
    fit_learner(md, &params, seed::derive(seed, &[1]))
}

/// `folds`-fold cross-validation over a shuffled partition (shuffle seed
/// `derive(seed, [0])`; fold `f` trains with `derive(seed, [1, f])`). Each
/// training fold runs its own hyperparameter search; test scores are
/// thresholded at 0.5 for the bit metrics.
pub fn cross_validate_meta(md: &MetaDataset, config: &LearnerConfig, folds: usize, seed: u64) -> Result<EvalReport> {
    let n = md.len();
    if folds < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 folds, got {folds}")));
    }
    if n < folds {
        return Err(Error::InvalidDataset(format!("{n} meta-instances cannot fill {folds} folds")));
    }
    let order = shuffled(n, seed::derive(seed, &[0]));
    let per_fold: Vec<FoldReport> = (0..folds)
        .into_par_iter()
        .map(|f| -> Result<FoldReport> {
            let test_rows: Vec<usize> = order.iter().skip(f).step_by(folds).copied().collect();
            let train_rows: Vec<usize> = order
                .iter()
                .enumerate()
                .filter(|(pos, _)| pos % folds != f)
                .map(|(_, &i)| i)
                .collect();
            let (train, test) = (md.subset(&train_rows), md.subset(&test_rows));
            let model = train_meta_learner(&train, config, seed::derive(seed, &[1, f as u64]))?;
            let scores = model.predict_scores_batch(&test.feature_rows())?;
            let truth = test.label_bits();
            let m = multilabel_metrics(&threshold_scores(&scores), &truth)?;
            Ok(FoldReport {
                fold: f,
                n_train: train.len(),
                n_test: test.len(),
                selected: model.params,
                hit_rate: hit_rate(&scores, &truth)?,
                baseline_hit_rate: random_hit_rate(&truth),
                hamming_loss: m.hamming_loss,
                macro_precision: m.macro_precision,
                macro_recall: m.macro_recall,
                macro_specificity: m.macro_specificity,
                macro_f1: m.macro_f1,
            })
        })
        .collect::<Result<_>>()?;
    let mean = |f: fn(&FoldReport) -> f64| per_fold.iter().map(f).sum::<f64>() / folds as f64;
    Ok(EvalReport {
        learner: config.kind,
        fold_count: folds,
        seed,
        n_instances: n,
        hit_rate: mean(|r| r.hit_rate),
        baseline_hit_rate: mean(|r| r.baseline_hit_rate),
        hamming_loss: mean(|r| r.hamming_loss),
        macro_precision: mean(|r| r.macro_precision),
        macro_recall: mean(|r| r.macro_recall),
        macro_specificity: mean(|r| r.macro_specificity),
        macro_f1: mean(|r| r.macro_f1),
        per_fold,
    })
}
