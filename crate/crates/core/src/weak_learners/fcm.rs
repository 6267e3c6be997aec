use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{squared_euclidean, Matrix};
use crate::seed;

pub const DEFAULT_FUZZIFIER: f64 = 2.0;
pub const DEFAULT_TOL: f64 = 1e-5;
pub const DEFAULT_MAX_ITER: usize = 300;

/// n x c fuzzy memberships; every row sums to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipMatrix {
    pub values: Matrix,
    pub iterations: usize,
    pub converged: bool,
}

impl MembershipMatrix {
    /// Mean over rows of the sum of squared memberships (fuzzifier 2 form of
    /// the partition coefficient).
    pub fn partition_coefficient(&self) -> f64 {
        let n = self.values.rows();
        let total: f64 = self.values.as_slice().iter().map(|u| u * u).sum();
        total / n as f64
    }
}

/// Fuzzy c-means by alternating centroid and membership updates, starting
/// from uniformly random row-normalized memberships. Stops when no
/// membership moves by `tol` or more, or after `max_iter` rounds.
///
/// A row at zero distance from one or more centroids splits its membership
/// evenly across them, so fully duplicated data yields `1/c` everywhere.
pub fn fuzzy_cmeans(x: &Matrix, c: usize, fuzzifier: f64, tol: f64, max_iter: usize, seed: u64) -> Result<MembershipMatrix> {
    let (n, d) = (x.rows(), x.cols());
    if c < 2 {
        return Err(Error::InvalidParameter(format!("cluster count {c} < 2")));
    }
    if c > n {
        return Err(Error::InvalidParameter(format!("cluster count {c} exceeds {n} rows")));
    }
    if fuzzifier.partial_cmp(&1.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::InvalidParameter(format!("fuzzifier {fuzzifier} must exceed 1")));
    }
    let mut rng = seed::rng(seed);
    let mut u = Matrix::zeros(n, c);
    for i in 0..n {
        let row = u.row_mut(i);
        for v in row.iter_mut() {
            *v = rng.random::<f64>() + f64::MIN_POSITIVE;
        }
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= s);
    }
    let exponent = 1.0 / (fuzzifier - 1.0);
    let squared_weights = fuzzifier == 2.0;
    let mut centroids = Matrix::zeros(c, d);
    let mut weights = vec![0.0; c];
    let mut d2 = vec![0.0; c];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        // centroids
        let mut sums = Matrix::zeros(c, d);
        weights.iter_mut().for_each(|w| *w = 0.0);
        for i in 0..n {
            let xi = x.row(i);
            for j in 0..c {
                let uij = u.get(i, j);
                let w = if squared_weights { uij * uij } else { uij.powf(fuzzifier) };
                weights[j] += w;
                for (s, v) in sums.row_mut(j).iter_mut().zip(xi) {
                    *s += w * v;
                }
            }
        }
        for j in 0..c {
            if weights[j] > 0.0 {
                for (dst, s) in centroids.row_mut(j).iter_mut().zip(sums.row(j)) {
                    *dst = s / weights[j];
                }
            }
        }
        // memberships
        let mut max_change: f64 = 0.0;
        for i in 0..n {
            let xi = x.row(i);
            for (j, dd) in d2.iter_mut().enumerate() {
                *dd = squared_euclidean(xi, centroids.row(j));
            }
            let zeros = d2.iter().filter(|&&v| v == 0.0).count();
            let row = u.row_mut(i);
            if zeros > 0 {
                for (j, v) in row.iter_mut().enumerate() {
                    let new = if d2[j] == 0.0 { 1.0 / zeros as f64 } else { 0.0 };
                    max_change = max_change.max((new - *v).abs());
                    *v = new;
                }
                continue;
            }
            let dmin = d2.iter().copied().fold(f64::INFINITY, f64::min);
            let mut total = 0.0;
            for w in d2.iter_mut() {
                let r = if squared_weights { dmin / *w } else { (dmin / *w).powf(exponent) };
                total += r;
                *w = r;
            }
            for (j, v) in row.iter_mut().enumerate() {
                let new = d2[j] / total;
                max_change = max_change.max((new - *v).abs());
                *v = new;
            }
        }
        if max_change < tol {
            converged = true;
            break;
        }
    }
    Ok(MembershipMatrix {
        values: u,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row_sums_ok(m: &MembershipMatrix) {
        for r in m.values.iter_rows() {
            assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn separated_points_go_one_hot() {
        let x = Matrix::from_rows(&[vec![-100.0, 0.0], vec![100.0, 0.0]]);
        let m = fuzzy_cmeans(&x, 2, 2.0, 1e-5, 300, 4).unwrap();
        row_sums_ok(&m);
        for r in m.values.iter_rows() {
            assert!(r.iter().copied().fold(0.0, f64::max) > 0.999);
        }
        assert!(m.partition_coefficient() > 0.999);
    }

    #[test]
    fn duplicated_points_are_uniform() {
        let x = Matrix::from_rows(&vec![vec![1.5, -2.0]; 6]);
        let m = fuzzy_cmeans(&x, 3, 2.0, 1e-5, 300, 1).unwrap();
        row_sums_ok(&m);
        for v in m.values.as_slice() {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!((m.partition_coefficient() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0]]);
        assert!(fuzzy_cmeans(&x, 3, 2.0, 1e-5, 10, 0).is_err());
        assert!(fuzzy_cmeans(&x, 2, 1.0, 1e-5, 10, 0).is_err());
        assert!(fuzzy_cmeans(&x, 1, 2.0, 1e-5, 10, 0).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let x = Matrix::from_rows(&(0..20).map(|i| vec![(i as f64).sin(), (i as f64).cos()]).collect::<Vec<_>>());
        let a = fuzzy_cmeans(&x, 3, 2.0, 1e-5, 300, 11).unwrap();
        let b = fuzzy_cmeans(&x, 3, 2.0, 1e-5, 300, 11).unwrap();
        assert_eq!(a, b);
    }
}
