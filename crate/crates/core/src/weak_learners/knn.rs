use crate::error::{Error, Result};
use crate::matrix::{squared_euclidean, Matrix};
use crate::stats::majority;
use crate::tabular::Dataset;

/// Indices of the `k` rows of `x` closest to `query`, nearest first. Distance
/// ties go to the lower row index; `exclude` removes one row (the query itself
/// when it belongs to `x`).
pub fn k_nearest(x: &Matrix, query: &[f64], k: usize, exclude: Option<usize>) -> Vec<usize> {
    let mut dist: Vec<(f64, usize)> = (0..x.rows())
        .filter(|&i| Some(i) != exclude)
        .map(|i| (squared_euclidean(x.row(i), query), i))
        .collect();
    nearest_from(&mut dist, k)
}

fn nearest_from(dist: &mut [(f64, usize)], k: usize) -> Vec<usize> {
    let k = k.min(dist.len());
    if k == 0 {
        return Vec::new();
    }
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < dist.len() {
        dist.select_nth_unstable_by(k - 1, cmp);
    }
    let head = &mut dist[..k];
    head.sort_unstable_by(cmp);
    head.iter().map(|&(_, i)| i).collect()
}

/// A row's neighbors with their (non-squared) Euclidean distances.
#[derive(Debug, Clone)]
pub struct Neighborhood {
    pub indices: Vec<usize>,
    pub distances: Vec<f64>,
}

/// `k` nearest neighbors of every row of `x` among the other rows.
pub fn knn_graph(x: &Matrix, k: usize) -> Vec<Neighborhood> {
    let n = x.rows();
    let mut buf: Vec<(f64, usize)> = Vec::with_capacity(n);
    (0..n)
        .map(|i| {
            buf.clear();
            let qi = x.row(i);
            buf.extend((0..n).filter(|&j| j != i).map(|j| (squared_euclidean(x.row(j), qi), j)));
            let indices = nearest_from(&mut buf, k);
            let distances = indices
                .iter()
                .map(|&j| squared_euclidean(x.row(j), qi).sqrt())
                .collect();
            Neighborhood { indices, distances }
        })
        .collect()
}

/// Majority vote over the `k` Euclidean nearest training rows; vote ties go
/// to the smallest class index.
pub fn knn_classify(train: &Dataset, queries: &Matrix, k: usize) -> Result<Vec<usize>> {
    knn_predict(train.features(), train.target(), train.class_count(), queries, k)
}

pub(crate) fn knn_predict(
    x: &Matrix,
    y: &[usize],
    class_count: usize,
    queries: &Matrix,
    k: usize,
) -> Result<Vec<usize>> {
    if x.rows() == 0 {
        return Err(Error::InvalidParameter("empty training set".into()));
    }
    if k == 0 || k > x.rows() {
        return Err(Error::InvalidParameter(format!(
            "k = {k} must be in 1..={}",
            x.rows()
        )));
    }
    if queries.cols() != x.cols() {
        return Err(Error::DimensionMismatch(format!(
            "queries have {} columns, training data {}",
            queries.cols(),
            x.cols()
        )));
    }
    let mut votes = vec![0usize; class_count];
    Ok(queries
        .iter_rows()
        .map(|q| {
            votes.iter_mut().for_each(|v| *v = 0);
            for i in k_nearest(x, q, k, None) {
                votes[y[i]] += 1;
            }
            majority(&votes)
        })
        .collect())
}
