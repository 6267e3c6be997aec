//! Hit rate and multilabel classification metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::argmax;

/// Fraction of instances whose top-scored label (ties to the lowest index) is
/// positive in the truth.
pub fn hit_rate(scores: &[Vec<f64>], truth: &[Vec<bool>]) -> Result<f64> {
    check_shapes(scores.iter().map(Vec::len), truth, "scores")?;
    if truth.is_empty() {
        return Ok(0.0);
    }
    let hits = scores.iter().zip(truth).filter(|(s, t)| t[argmax(s)]).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Expected hit rate of picking a label uniformly at random: the mean
/// fraction of positive labels per instance.
pub fn random_hit_rate(truth: &[Vec<bool>]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let total: f64 = truth
        .iter()
        .map(|t| {
            if t.is_empty() {
                0.0
            } else {
                t.iter().filter(|&&b| b).count() as f64 / t.len() as f64
            }
        })
        .sum();
    total / truth.len() as f64
}

/// Hamming loss and label-macro-averaged precision, recall, specificity and
/// F1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultilabelMetrics {
    pub hamming_loss: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_specificity: f64,
    pub macro_f1: f64,
}

/// `0/0` counts as 0 for precision, recall and F1; a label without negatives
/// has specificity 1.
pub fn multilabel_metrics(pred: &[Vec<bool>], truth: &[Vec<bool>]) -> Result<MultilabelMetrics> {
    check_shapes(pred.iter().map(Vec::len), truth, "predictions")?;
    let p = truth.first().map_or(0, Vec::len);
    if truth.is_empty() || p == 0 {
        return Err(Error::DimensionMismatch("multilabel metrics need at least one instance and label".into()));
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let mut wrong = 0usize;
    let (mut precision, mut recall, mut specificity, mut f1) = (0.0, 0.0, 0.0, 0.0);
    for j in 0..p {
        let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
        for (pr, tr) in pred.iter().zip(truth) {
            match (pr[j], tr[j]) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, false) => tn += 1,
                (false, true) => fn_ += 1,
            }
        }
        wrong += fp + fn_;
        precision += ratio(tp, tp + fp);
        recall += ratio(tp, tp + fn_);
        specificity += if tn + fp == 0 { 1.0 } else { ratio(tn, tn + fp) };
        f1 += ratio(2 * tp, 2 * tp + fp + fn_);
    }
    let pf = p as f64;
    Ok(MultilabelMetrics {
        hamming_loss: wrong as f64 / (truth.len() * p) as f64,
        macro_precision: precision / pf,
        macro_recall: recall / pf,
        macro_specificity: specificity / pf,
        macro_f1: f1 / pf,
    })
}

fn check_shapes(rows: impl ExactSizeIterator<Item = usize>, truth: &[Vec<bool>], what: &str) -> Result<()> {
    if rows.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} {what} rows vs {} truth rows",
            rows.len(),
            truth.len()
        )));
    }
    let p = truth.first().map_or(0, Vec::len);
    for (i, (len, t)) in rows.zip(truth).enumerate() {
        if len != p || t.len() != p {
            return Err(Error::DimensionMismatch(format!("row {i}: expected {p} labels")));
        }
    }
    Ok(())
}

/// Bits of scores at or above 0.5.
pub fn threshold_scores(scores: &[Vec<f64>]) -> Vec<Vec<bool>> {
    scores.iter().map(|s| s.iter().map(|&v| v >= 0.5).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hit_rate_examples() {
        let truth = vec![vec![true, true, false], vec![false, true, false], vec![true, false, false]];
        let scores = vec![vec![0.9, 0.1, 0.0], vec![0.2, 0.5, 0.5], vec![0.1, 0.1, 0.8]];
        assert!((hit_rate(&scores, &truth).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        // tie between labels 1 and 2 goes to 1
        let tie = vec![vec![0.0, 0.5, 0.5]];
        assert_eq!(hit_rate(&tie, &[vec![false, true, false]]).unwrap(), 1.0);
    }

    #[test]
    fn metrics_examples() {
        let truth = vec![vec![true, false, true, false]];
        let m = multilabel_metrics(&truth, &truth).unwrap();
        assert_eq!(m.hamming_loss, 0.0);
        // labels 1 and 3 are never true nor predicted: 0/0 → 0
        assert_eq!(m.macro_precision, 0.5);
        assert_eq!(m.macro_specificity, 1.0);
        let neg: Vec<Vec<bool>> = truth.iter().map(|r| r.iter().map(|b| !b).collect()).collect();
        assert_eq!(multilabel_metrics(&neg, &truth).unwrap().hamming_loss, 1.0);
        let mut one = vec![vec![true; 24]];
        let t = one.clone();
        one[0][5] = false;
        assert!((multilabel_metrics(&one, &t).unwrap().hamming_loss - 1.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn mismatch_is_error() {
        assert!(multilabel_metrics(&[vec![true]], &[vec![true, false]]).is_err());
        assert!(hit_rate(&[vec![0.1]], &[]).is_err());
    }
}
