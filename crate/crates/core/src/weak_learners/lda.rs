use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::stats::argmax;
use crate::tabular::Dataset;

pub const DEFAULT_SHRINKAGE: f64 = 1e-4;

/// Linear discriminant analysis with a shrunk pooled covariance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lda {
    /// Per class: Sigma^-1 mu_k.
    coef: Vec<Vec<f64>>,
    /// Per class: -0.5 mu_k' Sigma^-1 mu_k + ln prior; -inf for absent classes.
    intercept: Vec<f64>,
}

/// Pooled within-class covariance `S` (population normalization) regularized
/// as `(1 - shrinkage) * S + shrinkage * mean_variance * I`.
pub fn fit_lda(train: &Dataset, shrinkage: f64) -> Result<Lda> {
    if !(0.0..=1.0).contains(&shrinkage) {
        return Err(Error::InvalidParameter(format!("shrinkage {shrinkage} not in [0, 1]")));
    }
    let x = train.features();
    let (n, d, c) = (train.n_rows(), train.n_features(), train.class_count());
    let counts = train.class_counts();
    let mut means = vec![vec![0.0; d]; c];
    for i in 0..n {
        let k = train.target()[i];
        for (m, v) in means[k].iter_mut().zip(x.row(i)) {
            *m += v;
        }
    }
    for (k, m) in means.iter_mut().enumerate() {
        if counts[k] > 0 {
            m.iter_mut().for_each(|v| *v /= counts[k] as f64);
        }
    }
    let mut cov = DMatrix::<f64>::zeros(d, d);
    let mut centered = vec![0.0; d];
    for i in 0..n {
        let k = train.target()[i];
        for (cj, (v, m)) in centered.iter_mut().zip(x.row(i).iter().zip(&means[k])) {
            *cj = v - m;
        }
        for a in 0..d {
            let ca = centered[a];
            if ca == 0.0 {
                continue;
            }
            for b in a..d {
                cov[(a, b)] += ca * centered[b];
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            let v = cov[(a, b)] / n as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    let mean_var = cov.trace() / d as f64;
    let target = if mean_var > 0.0 { mean_var } else { 1.0 };
    let mut reg = cov * (1.0 - shrinkage);
    for a in 0..d {
        reg[(a, a)] += shrinkage * target;
    }
    let max_diag = (0..d).map(|a| reg[(a, a)]).fold(0.0, f64::max);
    let chol = reg
        .cholesky()
        .ok_or(Error::SingularCovariance { shrinkage })?;
    let l = chol.l_dirty();
    if (0..d).any(|a| l[(a, a)] * l[(a, a)] <= 1e-12 * max_diag) {
        return Err(Error::SingularCovariance { shrinkage });
    }
    let mut coef = Vec::with_capacity(c);
    let mut intercept = Vec::with_capacity(c);
    for k in 0..c {
        if counts[k] == 0 {
            coef.push(vec![0.0; d]);
            intercept.push(f64::NEG_INFINITY);
            continue;
        }
        let mu = DVector::from_column_slice(&means[k]);
        let w = chol.solve(&mu);
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularCovariance { shrinkage });
        }
        intercept.push(-0.5 * mu.dot(&w) + (counts[k] as f64 / n as f64).ln());
        coef.push(w.iter().copied().collect());
    }
    Ok(Lda { coef, intercept })
}

impl Lda {
    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        self.coef
            .iter()
            .zip(&self.intercept)
            .map(|(w, b)| {
                if *b == f64::NEG_INFINITY {
                    *b
                } else {
                    b + w.iter().zip(row).map(|(a, x)| a * x).sum::<f64>()
                }
            })
            .collect()
    }

    pub fn predict(&self, x: &Matrix) -> Vec<usize> {
        x.iter_rows().map(|r| argmax(&self.scores(r))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn query_at_class_mean() {
        let x = Matrix::from_rows(&[
            vec![-1.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, -1.0],
            vec![9.0, 0.0],
            vec![11.0, 0.0],
            vec![10.0, 1.0],
            vec![10.0, -1.0],
        ]);
        let ds = Dataset::new(x, vec![0, 0, 0, 0, 1, 1, 1, 1], vec!["a".into(), "b".into()], 2).unwrap();
        let lda = fit_lda(&ds, DEFAULT_SHRINKAGE).unwrap();
        assert_eq!(lda.predict(&Matrix::from_rows(&[vec![0.0, 0.0], vec![10.0, 0.0]])), vec![0, 1]);
    }

    #[test]
    fn identical_means_fall_back_to_prior() {
        let x = Matrix::from_rows(&[vec![-1.0], vec![1.0], vec![-1.0], vec![1.0], vec![-1.0], vec![1.0]]);
        let ds = Dataset::new(x, vec![0, 0, 1, 1, 1, 1], vec!["a".into()], 2).unwrap();
        let lda = fit_lda(&ds, DEFAULT_SHRINKAGE).unwrap();
        assert_eq!(lda.predict(&Matrix::from_rows(&[vec![-3.0], vec![0.0], vec![3.0]])), vec![1, 1, 1]);
    }

    #[test]
    fn collinear_features_need_shrinkage() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let target = (0..10).map(|i| usize::from(i >= 5)).collect();
        let ds = Dataset::new(Matrix::from_rows(&rows), target, vec!["a".into(), "b".into()], 2).unwrap();
        assert!(matches!(fit_lda(&ds, 0.0), Err(Error::SingularCovariance { .. })));
        assert!(fit_lda(&ds, DEFAULT_SHRINKAGE).is_ok());
    }
}
