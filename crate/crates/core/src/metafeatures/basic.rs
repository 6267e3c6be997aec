//! Closed-form meta-features: class-frequency statistics, correlations,
//! covariances, moments, normality counts and the leading eigenvalue.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::seed;
use crate::stats::{mean, std_dev, variance, Summary};

/// Class entropy in bits over classes with non-zero count.
pub fn class_entropy(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let h = -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n as f64;
            p * p.log2()
        })
        .sum::<f64>();
    h.max(0.0)
}

/// min, max, mean and std of per-class frequency ratios (all declared
/// classes, so the mean is `1/c`).
pub fn class_distribution_stats(counts: &[usize]) -> Summary {
    let n: usize = counts.iter().sum();
    let ratios: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    Summary::of(&ratios)
}

/// Categorical index of dispersion `(n² − Σ f²) / (n² (c − 1))`.
pub fn dispersion(counts: &[usize]) -> f64 {
    let c = counts.len();
    let n: usize = counts.iter().sum();
    if c < 2 || n == 0 {
        return 0.0;
    }
    let n2 = (n as f64).powi(2);
    let sq: f64 = counts.iter().map(|&f| (f as f64).powi(2)).sum();
    (n2 - sq) / (n2 * (c - 1) as f64)
}

/// Whether every value equals the first (exactly).
pub fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&x| x == v[0])
}

fn centered(col: &[f64]) -> Vec<f64> {
    let m = mean(col);
    col.iter().map(|v| v - m).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Absolute Pearson correlation over all unordered feature pairs; constant
/// features correlate 0 with everything. Zeros when `d < 2`.
pub fn corr_ff_stats(x: &Matrix) -> Summary {
    let cols: Vec<Vec<f64>> = x.columns().iter().map(|c| centered(c)).collect();
    let constant: Vec<bool> = x.columns().iter().map(|c| is_constant(c)).collect();
    let norms: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    let d = cols.len();
    let mut values = Vec::with_capacity(d * d.saturating_sub(1) / 2);
    for i in 0..d {
        for j in i + 1..d {
            let r = if constant[i] || constant[j] || norms[i] == 0.0 || norms[j] == 0.0 {
                0.0
            } else {
                (dot(&cols[i], &cols[j]) / (norms[i] * norms[j])).abs().min(1.0)
            };
            values.push(r);
        }
    }
    Summary::of(&values)
}

/// Separate aggregation of strictly negative and strictly positive values;
/// zeros belong to neither side and an empty side is all zeros.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SignedStats {
    /// Most negative value.
    pub neg_extreme: f64,
    pub neg_mean: f64,
    pub neg_std: f64,
    /// Largest positive value.
    pub pos_extreme: f64,
    pub pos_mean: f64,
    pub pos_std: f64,
}

pub fn signed_stats(values: &[f64]) -> SignedStats {
    let neg: Vec<f64> = values.iter().copied().filter(|&v| v < 0.0).collect();
    let pos: Vec<f64> = values.iter().copied().filter(|&v| v > 0.0).collect();
    let mut s = SignedStats::default();
    if !neg.is_empty() {
        s.neg_extreme = neg.iter().copied().fold(f64::INFINITY, f64::min);
        s.neg_mean = mean(&neg);
        s.neg_std = std_dev(&neg);
    }
    if !pos.is_empty() {
        s.pos_extreme = pos.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        s.pos_mean = mean(&pos);
        s.pos_std = std_dev(&pos);
    }
    s
}

/// Summary of per-feature population variances.
pub fn variance_stats(x: &Matrix) -> Summary {
    let v: Vec<f64> = x.columns().iter().map(|c| variance(c)).collect();
    Summary::of(&v)
}

/// Population covariance matrix of the raw features.
pub fn covariance_matrix(x: &Matrix) -> Vec<Vec<f64>> {
    let n = x.rows() as f64;
    let cols: Vec<Vec<f64>> = x.columns().iter().map(|c| centered(c)).collect();
    let d = cols.len();
    let mut cov = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in i..d {
            let v = dot(&cols[i], &cols[j]) / n;
            cov[i][j] = v;
            cov[j][i] = v;
        }
    }
    cov
}

/// Signed statistics over the covariances of all unordered feature pairs.
pub fn covariance_signed(x: &Matrix) -> SignedStats {
    signed_stats(&pair_covariances(&covariance_matrix(x)))
}

fn pair_covariances(cov: &[Vec<f64>]) -> Vec<f64> {
    let d = cov.len();
    let mut out = Vec::with_capacity(d * d.saturating_sub(1) / 2);
    for i in 0..d {
        for j in i + 1..d {
            out.push(cov[i][j]);
        }
    }
    out
}

/// Population skewness `g1` and excess kurtosis `g2` of a column, or `None`
/// for a constant column.
pub fn skew_kurtosis(col: &[f64]) -> Option<(f64, f64)> {
    if col.is_empty() || is_constant(col) {
        return None;
    }
    let n = col.len() as f64;
    let c = centered(col);
    let m2 = c.iter().map(|v| v * v).sum::<f64>() / n;
    if m2 <= 0.0 {
        return None;
    }
    let m3 = c.iter().map(|v| v * v * v).sum::<f64>() / n;
    let m4 = c.iter().map(|v| (v * v) * (v * v)).sum::<f64>() / n;
    Some((m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0))
}

/// Signed statistics of per-feature skewness and of excess kurtosis;
/// constant features are left out of both.
pub fn skew_kurtosis_signed(x: &Matrix) -> (SignedStats, SignedStats) {
    let (skews, kurts): (Vec<f64>, Vec<f64>) = x.columns().iter().filter_map(|c| skew_kurtosis(c)).unzip();
    (signed_stats(&skews), signed_stats(&kurts))
}

/// Number of features whose Jarque–Bera statistic stays at or below the
/// chi-square(2) critical value `−2 ln α`. Constant features are not
/// counted; fewer than 20 rows gives 0.
pub fn count_normal_features(x: &Matrix, alpha: f64) -> usize {
    let n = x.rows();
    if n < 20 {
        return 0;
    }
    let critical = -2.0 * alpha.ln();
    x.columns()
        .iter()
        .filter_map(|c| skew_kurtosis(c))
        .filter(|&(g1, g2)| n as f64 * (g1 * g1 / 6.0 + g2 * g2 / 24.0) <= critical)
        .count()
}

const POWER_TOL: f64 = 1e-9;
const POWER_MAX_ITER: usize = 10_000;
const POWER_START_SEED: u64 = 0x6d61_7865_6967;

/// Largest eigenvalue of the population covariance matrix by power
/// iteration from a fixed pseudo-random start vector.
pub fn max_eigenvalue(x: &Matrix) -> f64 {
    power_iteration(&covariance_matrix(x))
}

pub(crate) fn power_iteration(a: &[Vec<f64>]) -> f64 {
    let d = a.len();
    if d == 0 {
        return 0.0;
    }
    if d == 1 {
        return a[0][0].max(0.0);
    }
    let mut rng = seed::rng(POWER_START_SEED);
    let mut v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    let mut lambda = 0.0;
    let mut w = vec![0.0; d];
    for _ in 0..POWER_MAX_ITER {
        for (i, row) in a.iter().enumerate() {
            w[i] = dot(row, &v);
        }
        // Rayleigh quotient of the current unit vector
        let next = dot(&v, &w);
        let norm = dot(&w, &w).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
        let done = (next - lambda).abs() <= POWER_TOL * next.abs().max(1.0);
        lambda = next;
        if done {
            break;
        }
    }
    lambda.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(class_entropy(&[5, 5]), 1.0);
        assert!(close(class_entropy(&[2, 4]), 0.9183, 1e-4));
        assert_eq!(class_entropy(&[1, 1, 1, 1]), 2.0);
    }

    #[test]
    fn class_distribution_examples() {
        let s = class_distribution_stats(&[3, 3, 3, 3]);
        assert_eq!((s.min, s.max, s.mean, s.std), (0.25, 0.25, 0.25, 0.0));
        let s = class_distribution_stats(&[9, 1]);
        assert!(close(s.min, 0.1, 1e-15) && close(s.max, 0.9, 1e-15));
        assert!(close(s.mean, 0.5, 1e-15) && close(s.std, 0.4, 1e-15));
    }

    #[test]
    fn dispersion_examples() {
        assert_eq!(dispersion(&[5, 5]), 0.5);
        assert_eq!(dispersion(&[10, 0]), 0.0);
        assert!(close(dispersion(&[4, 4, 4, 4]), 0.25, 1e-15));
    }

    #[test]
    fn signed_examples() {
        let s = signed_stats(&[-2.0, -1.0, 3.0]);
        assert_eq!((s.neg_extreme, s.neg_mean, s.neg_std), (-2.0, -1.5, 0.5));
        assert_eq!((s.pos_extreme, s.pos_mean, s.pos_std), (3.0, 3.0, 0.0));
        let s = signed_stats(&[1.0, 2.0]);
        assert_eq!((s.neg_extreme, s.neg_mean, s.neg_std), (0.0, 0.0, 0.0));
    }

    #[test]
    fn correlation_of_duplicates_and_negation() {
        let x = Matrix::from_columns(&[vec![1.0, 2.0, 4.0, 3.0], vec![1.0, 2.0, 4.0, 3.0]]);
        let s = corr_ff_stats(&x);
        assert!(close(s.min, 1.0, 1e-12) && close(s.max, 1.0, 1e-12) && s.std < 1e-12);
        let x = Matrix::from_columns(&[vec![1.0, 2.0, 4.0, 3.0], vec![-1.0, -2.0, -4.0, -3.0]]);
        assert!(close(corr_ff_stats(&x).max, 1.0, 1e-12));
        let x = Matrix::from_columns(&[vec![1.0, 2.0, 4.0, 3.0], vec![7.0; 4]]);
        assert_eq!(corr_ff_stats(&x).max, 0.0);
        let x = Matrix::from_columns(&[vec![1.0, 2.0]]);
        assert_eq!(corr_ff_stats(&x), Summary::default());
    }

    #[test]
    fn covariance_examples() {
        // ±√2 pattern: variance 2
        let a = vec![-1.0, 1.0, -1.0, 1.0];
        let scaled: Vec<f64> = a.iter().map(|v| v * 2f64.sqrt()).collect();
        let x = Matrix::from_columns(&[scaled.clone(), scaled]);
        let s = covariance_signed(&x);
        assert!(close(s.pos_extreme, 2.0, 1e-12));
        assert_eq!(s.neg_extreme, 0.0);
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        let s = covariance_signed(&Matrix::from_columns(&[a, neg]));
        assert!(close(s.neg_extreme, -1.0, 1e-12));
        let s = covariance_signed(&Matrix::from_columns(&[vec![1.0, 2.0]]));
        assert_eq!(s, SignedStats::default());
    }

    #[test]
    fn symmetric_column_has_no_skew() {
        let x = Matrix::from_columns(&[vec![-2.0, -1.0, 0.0, 1.0, 2.0], vec![3.0; 5]]);
        let (skew, kurt) = skew_kurtosis_signed(&x);
        assert_eq!(skew, SignedStats::default());
        // discrete uniform on 5 points: excess kurtosis -1.3
        assert!(close(kurt.neg_extreme, -1.3, 1e-12));
    }

    #[test]
    fn small_samples_count_no_normal_features() {
        let x = Matrix::from_columns(&[(0..10).map(|i| i as f64).collect()]);
        assert_eq!(count_normal_features(&x, 0.05), 0);
    }

    #[test]
    fn eigenvalue_examples() {
        let x = Matrix::from_columns(&[vec![-2.0, 2.0, -2.0, 2.0]]);
        assert_eq!(max_eigenvalue(&x), 4.0);
        let a = vec![-1.0, 1.0, -1.0, 1.0];
        let x = Matrix::from_columns(&[a.clone(), a.clone()]);
        assert!(close(max_eigenvalue(&x), 2.0, 1e-9));
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        let x = Matrix::from_columns(&[a, neg]);
        assert!(close(max_eigenvalue(&x), 2.0, 1e-9));
    }
}
