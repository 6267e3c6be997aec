use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::stats::argmax;
use crate::tabular::Dataset;

/// Gaussian naive Bayes with a variance floor of `1e-9 * max feature variance`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianNb {
    log_priors: Vec<f64>,
    means: Vec<Vec<f64>>,
    variances: Vec<Vec<f64>>,
}

pub fn fit_gaussian_nb(train: &Dataset) -> GaussianNb {
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
    let mut variances = vec![vec![0.0; d]; c];
    for i in 0..n {
        let k = train.target()[i];
        for ((s, v), m) in variances[k].iter_mut().zip(x.row(i)).zip(&means[k]) {
            *s += (v - m) * (v - m);
        }
    }
    let max_var = (0..d)
        .map(|j| crate::stats::variance(&x.column(j)))
        .fold(0.0, f64::max);
    let floor = if max_var > 0.0 { 1e-9 * max_var } else { 1e-9 };
    for (k, var) in variances.iter_mut().enumerate() {
        let cnt = counts[k].max(1) as f64;
        var.iter_mut().for_each(|v| *v = *v / cnt + floor);
    }
    let log_priors = counts
        .iter()
        .map(|&cnt| {
            if cnt == 0 {
                f64::NEG_INFINITY
            } else {
                (cnt as f64 / n as f64).ln()
            }
        })
        .collect();
    GaussianNb {
        log_priors,
        means,
        variances,
    }
}

impl GaussianNb {
    pub fn joint_log_likelihood(&self, row: &[f64]) -> Vec<f64> {
        self.log_priors
            .iter()
            .enumerate()
            .map(|(k, &lp)| {
                if lp == f64::NEG_INFINITY {
                    return lp;
                }
                lp + row
                    .iter()
                    .zip(&self.means[k])
                    .zip(&self.variances[k])
                    .map(|((x, m), v)| -0.5 * (2.0 * std::f64::consts::PI * v).ln() - (x - m) * (x - m) / (2.0 * v))
                    .sum::<f64>()
            })
            .collect()
    }

    pub fn predict(&self, x: &Matrix) -> Vec<usize> {
        x.iter_rows().map(|r| argmax(&self.joint_log_likelihood(r))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closer_mean_wins() {
        let x = Matrix::from_rows(&[vec![-2.0], vec![0.0], vec![0.0], vec![2.0]]);
        let ds = Dataset::new(x, vec![0, 0, 1, 1], vec!["x".into()], 2).unwrap();
        // class 0: mean -1, var 1; class 1: mean +1, var 1
        let nb = fit_gaussian_nb(&ds);
        assert_eq!(nb.predict(&Matrix::from_rows(&[vec![0.9]])), vec![1]);
        assert_eq!(nb.predict(&Matrix::from_rows(&[vec![-0.1]])), vec![0]);
    }

    #[test]
    fn exact_tie_goes_to_class_zero() {
        let x = Matrix::from_rows(&[vec![-2.0], vec![0.0], vec![0.0], vec![2.0]]);
        let ds = Dataset::new(x, vec![0, 0, 1, 1], vec!["x".into()], 2).unwrap();
        let nb = fit_gaussian_nb(&ds);
        assert_eq!(nb.predict(&Matrix::from_rows(&[vec![0.0]])), vec![0]);
    }
}
