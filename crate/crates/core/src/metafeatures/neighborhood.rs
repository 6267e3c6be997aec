//! Neighborhood meta-features on standardized data: fuzzy partition
//! coefficient (Eq. 3), presumably correct sets (Eqs. 4–5) and the mean
//! negated local outlier factor.

use crate::error::Result;
use crate::matrix::Matrix;
use crate::stats::{majority, Summary};
use crate::weak_learners::fcm::{fuzzy_cmeans, DEFAULT_FUZZIFIER, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::weak_learners::knn::{knn_graph, Neighborhood};
use crate::weak_learners::lof::{default_k, lof_from_graph};

/// Partition coefficient of fuzzy c-means with one cluster per class.
pub fn fuzzy_partition_coefficient(z: &Matrix, class_count: usize, seed: u64) -> Result<f64> {
    let u = fuzzy_cmeans(z, class_count, DEFAULT_FUZZIFIER, DEFAULT_TOL, DEFAULT_MAX_ITER, seed)?;
    Ok(u.partition_coefficient())
}

/// Neighbor lists long enough for both the presumably-correct sets
/// (`c` neighbors) and LOF (`min(20, n − 1)` neighbors).
pub fn shared_graph(z: &Matrix, class_count: usize) -> Vec<Neighborhood> {
    let n = z.rows();
    let k = class_count.max(default_k(n)).min(n.saturating_sub(1));
    knn_graph(z, k)
}

/// Per present class, the fraction of its rows whose `c`-neighborhood
/// majority (ties to the smallest class) is the row's own class; summarized
/// over classes. Zeros when `n ≤ c`.
pub fn presum_correct_stats(graph: &[Neighborhood], y: &[usize], class_count: usize) -> Summary {
    let n = y.len();
    if n <= class_count {
        return Summary::default();
    }
    let mut correct = vec![0usize; class_count];
    let mut total = vec![0usize; class_count];
    let mut votes = vec![0usize; class_count];
    for (i, g) in graph.iter().enumerate() {
        votes.iter_mut().for_each(|v| *v = 0);
        for &j in &g.indices[..class_count] {
            votes[y[j]] += 1;
        }
        total[y[i]] += 1;
        if majority(&votes) == y[i] {
            correct[y[i]] += 1;
        }
    }
    let ratios: Vec<f64> = (0..class_count)
        .filter(|&l| total[l] > 0)
        .map(|l| correct[l] as f64 / total[l] as f64)
        .collect();
    Summary::of(&ratios)
}

/// Mean negated LOF with `k = min(20, n − 1)`; 0 when `n < 3`.
pub fn neg_outlier_factor(graph: &[Neighborhood]) -> f64 {
    let n = graph.len();
    if n < 3 {
        return 0.0;
    }
    let scores = lof_from_graph(graph, default_k(n));
    scores.iter().sum::<f64>() / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_pure_clusters_are_all_correct() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![if i < 10 { 0.0 } else { 100.0 } + i as f64 * 0.01]).collect();
        let y: Vec<usize> = (0..20).map(|i| usize::from(i >= 10)).collect();
        let z = Matrix::from_rows(&rows);
        let s = presum_correct_stats(&shared_graph(&z, 2), &y, 2);
        assert_eq!((s.min, s.max, s.mean, s.std), (1.0, 1.0, 1.0, 0.0));
    }

    #[test]
    fn isolated_singleton_class_scores_zero() {
        let rows: Vec<Vec<f64>> = (0..9).map(|i| vec![i as f64]).collect();
        let mut y = vec![0; 9];
        y[4] = 1;
        let z = Matrix::from_rows(&rows);
        let s = presum_correct_stats(&shared_graph(&z, 2), &y, 2);
        assert_eq!(s.min, 0.0);
    }

    #[test]
    fn tiny_inputs_degenerate_to_zero() {
        let z = Matrix::from_rows(&[vec![0.0], vec![1.0]]);
        let g = shared_graph(&z, 2);
        assert_eq!(presum_correct_stats(&g, &[0, 1], 2), Summary::default());
        assert_eq!(neg_outlier_factor(&g), 0.0);
    }

    #[test]
    fn outlier_lowers_mean_lof() {
        let grid: Vec<Vec<f64>> = (0..100).map(|i| vec![(i % 10) as f64, (i / 10) as f64]).collect();
        let base = neg_outlier_factor(&shared_graph(&Matrix::from_rows(&grid), 2));
        assert!((base + 1.0).abs() < 0.1, "{base}");
        let mut with = grid.clone();
        with.push(vec![100.0, 100.0]);
        let out = neg_outlier_factor(&shared_graph(&Matrix::from_rows(&with), 2));
        assert!(out < base);
    }
}
