//! Mutual information between continuous features and the class, and the
//! features derived from it (Eqs. 2, 7 and 8).

use rand_distr::{Distribution, StandardNormal};
use statrs::function::gamma::digamma;

use crate::matrix::Matrix;
use crate::seed;
use crate::stats::{mean, std_dev, Summary};

use super::basic::is_constant;

/// Default neighbor count of the MI estimator.
pub const MI_NEIGHBORS: usize = 3;
/// Denominator floor of the equivalent-feature count.
pub const MI_FLOOR: f64 = 1e-12;
/// Upper clamp of the uncertainty coefficient.
pub const UNCERTAINTY_CAP: f64 = 1.05;

/// Nearest-neighbor estimate of the mutual information (bits) between a
/// continuous `x` and a class vector `y`, clamped at 0.
///
/// `x` is scaled to unit std and jittered by `1e-10·max(1, mean|x|)`
/// Gaussian noise drawn from `seed` to break ties. Rows of singleton
/// classes carry no within-class neighbor and are left out; if some class
/// has fewer than `k + 1` members, `k` drops to (smallest class size − 1).
pub fn mutual_info_fc(x: &[f64], y: &[usize], k: usize, seed: u64) -> f64 {
    if x.is_empty() || is_constant(x) {
        return 0.0;
    }
    let class_count = y.iter().copied().max().unwrap_or(0) + 1;
    let mut counts = vec![0usize; class_count];
    for &c in y {
        counts[c] += 1;
    }
    let keep: Vec<usize> = (0..x.len()).filter(|&i| counts[y[i]] >= 2).collect();
    if keep.is_empty() {
        return 0.0;
    }
    let smallest = counts.iter().copied().filter(|&c| c >= 2).min().unwrap_or(2);
    let k = k.min(smallest - 1).max(1);

    let sd = std_dev(x);
    let scaled: Vec<f64> = x.iter().map(|v| v / sd).collect();
    let amplitude = 1e-10 * mean(&scaled.iter().map(|v| v.abs()).collect::<Vec<_>>()).max(1.0);
    let mut rng = seed::rng(seed);
    let jittered: Vec<f64> = scaled
        .iter()
        .map(|v| {
            let z: f64 = StandardNormal.sample(&mut rng);
            v + amplitude * z
        })
        .collect();

    let values: Vec<f64> = keep.iter().map(|&i| jittered[i]).collect();
    let labels: Vec<usize> = keep.iter().map(|&i| y[i]).collect();
    let n = values.len();
    let mut all_sorted = values.clone();
    all_sorted.sort_by(f64::total_cmp);

    let mut by_class: Vec<Vec<f64>> = vec![Vec::new(); class_count];
    for (&v, &c) in values.iter().zip(&labels) {
        by_class[c].push(v);
    }
    by_class.iter_mut().for_each(|v| v.sort_by(f64::total_cmp));

    let mut sum_nx = 0.0;
    let mut sum_m = 0.0;
    for (&v, &c) in values.iter().zip(&labels) {
        let class_vals = &by_class[c];
        let radius = kth_neighbor_distance(class_vals, v, k);
        let m = if radius > 0.0 {
            let lo = all_sorted.partition_point(|&u| u <= v - radius);
            let hi = all_sorted.partition_point(|&u| u < v + radius);
            hi - lo
        } else {
            let lo = all_sorted.partition_point(|&u| u < v);
            let hi = all_sorted.partition_point(|&u| u <= v);
            hi - lo
        };
        sum_nx += digamma(class_vals.len() as f64);
        sum_m += digamma(m.max(1) as f64);
    }
    let nf = n as f64;
    let mi = digamma(nf) + digamma(k as f64) - sum_nx / nf - sum_m / nf;
    (mi / std::f64::consts::LN_2).max(0.0)
}

/// Distance from `v` (a member of the sorted `sorted`) to its `k`-th nearest
/// other member, walking outward from its position.
fn kth_neighbor_distance(sorted: &[f64], v: f64, k: usize) -> f64 {
    let pos = sorted.partition_point(|&u| u < v);
    // `pos` is the first copy of v; skip exactly one copy (the point itself)
    let mut left = pos as isize - 1;
    let mut right = pos + 1;
    let mut dist = 0.0;
    for _ in 0..k {
        let dl = if left >= 0 { v - sorted[left as usize] } else { f64::INFINITY };
        let dr = if right < sorted.len() { sorted[right] - v } else { f64::INFINITY };
        if dl <= dr {
            dist = dl;
            left -= 1;
        } else {
            dist = dr;
            right += 1;
        }
    }
    dist
}

/// Mutual information of every feature with the class; feature `j` draws
/// its jitter from `seed::derive(seed, &[j])`.
pub fn feature_class_mi(x: &Matrix, y: &[usize], seed: u64) -> Vec<f64> {
    x.columns()
        .iter()
        .enumerate()
        .map(|(j, col)| mutual_info_fc(col, y, MI_NEIGHBORS, seed::derive(seed, &[j as u64])))
        .collect()
}

/// Summary of the feature–class mutual informations.
pub fn corr_fc_stats(mi: &[f64]) -> Summary {
    Summary::of(mi)
}

/// Equivalent number of features `E(y) / mean MI`, denominator floored at
/// [`MI_FLOOR`].
pub fn n_equiv_features(entropy: f64, mi: &[f64]) -> f64 {
    entropy / mean(mi).max(MI_FLOOR)
}

/// Summary of uncertainty coefficients `MI / E(y)`, each clamped to
/// `[0, UNCERTAINTY_CAP]`.
pub fn uncertainty_stats(entropy: f64, mi: &[f64]) -> Summary {
    let u: Vec<f64> = mi
        .iter()
        .map(|&m| if entropy > 0.0 { (m / entropy).clamp(0.0, UNCERTAINTY_CAP) } else { 0.0 })
        .collect();
    Summary::of(&u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn constant_feature_has_no_information() {
        assert_eq!(mutual_info_fc(&[2.0; 10], &[0, 1, 0, 1, 0, 1, 0, 1, 0, 1], 3, 0), 0.0);
    }

    #[test]
    fn informative_and_noise_features() {
        let mut rng = seed::rng(4);
        let n = 2000;
        let y: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let copy: Vec<f64> = y.iter().map(|&c| c as f64 + 1e-3 * rng.random::<f64>()).collect();
        let noise: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let m_copy = mutual_info_fc(&copy, &y, 3, 1);
        let m_noise = mutual_info_fc(&noise, &y, 3, 2);
        assert!((m_copy - 1.0).abs() < 0.1, "{m_copy}");
        assert!(m_noise <= 0.05, "{m_noise}");
    }

    #[test]
    fn kth_distance_skips_self_once() {
        let s = [0.0, 1.0, 1.0, 3.0];
        assert_eq!(kth_neighbor_distance(&s, 1.0, 1), 0.0);
        assert_eq!(kth_neighbor_distance(&s, 1.0, 2), 1.0);
        assert_eq!(kth_neighbor_distance(&s, 0.0, 3), 3.0);
    }

    #[test]
    fn derived_ratios() {
        assert_eq!(n_equiv_features(1.0, &[1.0]), 1.0);
        assert_eq!(n_equiv_features(1.0, &[0.5, 0.5]), 2.0);
        assert_eq!(n_equiv_features(1.0, &[0.0, 0.0]), 1e12);
        let u = uncertainty_stats(1.0, &[1.2, 0.5]);
        assert_eq!((u.min, u.max), (0.5, 1.05));
    }
}
