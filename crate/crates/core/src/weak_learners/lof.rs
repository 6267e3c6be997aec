use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::weak_learners::knn::{knn_graph, Neighborhood};

/// Neighborhood size used when the caller has no preference.
pub fn default_k(n: usize) -> usize {
    20.min(n.saturating_sub(1))
}

/// Negated local outlier factor per row, so inliers score close to -1 and
/// outliers well below. Neighborhoods hold exactly `k` rows (distance ties
/// by lower index); `1e-10` is added to mean reachability distances so
/// duplicated rows keep finite densities.
pub fn lof_scores(x: &Matrix, k: usize) -> Result<Vec<f64>> {
    let n = x.rows();
    if n < 3 {
        return Err(Error::InvalidParameter(format!("local outlier factor needs at least 3 rows, got {n}")));
    }
    let k = k.clamp(1, n - 1);
    Ok(lof_from_graph(&knn_graph(x, k), k))
}

/// LOF scores from a neighbor graph whose lists hold at least `k` entries,
/// nearest first; only the first `k` of each list are used.
pub(crate) fn lof_from_graph(graph: &[Neighborhood], k: usize) -> Vec<f64> {
    let k_distance: Vec<f64> = graph.iter().map(|g| g.distances[k - 1]).collect();
    let lrd: Vec<f64> = graph
        .iter()
        .map(|g| {
            let reach: f64 = g.indices[..k]
                .iter()
                .zip(&g.distances[..k])
                .map(|(&o, &dist)| dist.max(k_distance[o]))
                .sum::<f64>()
                / k as f64;
            1.0 / (reach + 1e-10)
        })
        .collect();
    graph
        .iter()
        .enumerate()
        .map(|(p, g)| {
            let ratio: f64 = g.indices[..k].iter().map(|&o| lrd[o]).sum::<f64>() / k as f64;
            -(ratio / lrd[p])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn needs_three_rows() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0]]);
        assert!(lof_scores(&x, 1).is_err());
    }

    #[test]
    fn evenly_spaced_line_is_inlying() {
        let x = Matrix::from_rows(&(0..30).map(|i| vec![i as f64]).collect::<Vec<_>>());
        let s = lof_scores(&x, 2).unwrap();
        for v in &s[3..27] {
            assert!((v + 1.0).abs() < 1e-6, "{v}");
        }
    }
}
