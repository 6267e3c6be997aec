//! Gradient-boosted regression trees on the softmax cross-entropy, with
//! optional dropout of earlier rounds (dart).
//!
//! Features are quantile-binned once (at most `max_bins` bins, 64 by
//! default); each round fits one depth-limited tree per class with Newton
//! leaf values `−G / (H + λ)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;
use crate::stats::argmax;
use crate::tabular::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boosting {
    Standard,
    Dart,
}

impl Boosting {
    pub fn name(self) -> &'static str {
        match self {
            Boosting::Standard => "standard",
            Boosting::Dart => "dart",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "standard" | "gbdt" => Ok(Boosting::Standard),
            "dart" => Ok(Boosting::Dart),
            other => Err(Error::InvalidParameter(format!("unknown boosting type `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmParams {
    pub boosting: Boosting,
    pub learning_rate: f64,
    pub n_estimators: usize,
    /// Per-round drop probability under dart.
    pub drop_rate: f64,
    pub max_depth: usize,
    pub min_child_samples: usize,
    /// L2 penalty on leaf values.
    pub lambda: f64,
    pub max_bins: usize,
}

impl GbmParams {
    pub fn new(boosting: Boosting, learning_rate: f64, n_estimators: usize) -> Self {
        GbmParams {
            boosting,
            learning_rate,
            n_estimators,
            drop_rate: 0.1,
            max_depth: 3,
            min_child_samples: 20,
            lambda: 1.0,
            max_bins: 64,
        }
    }
}

const MIN_CHILD_HESSIAN: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum RegNode {
    Split {
        feature: u32,
        bin: u8,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RegTree {
    nodes: Vec<RegNode>,
}

impl RegTree {
    fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                RegNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if row[*feature as usize] <= *threshold { *left } else { *right } as usize,
                RegNode::Leaf { value } => return *value,
            }
        }
    }

    fn predict_binned(&self, bins: &[Vec<u8>], r: usize) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                RegNode::Split {
                    feature,
                    bin,
                    left,
                    right,
                    ..
                } => i = if bins[*feature as usize][r] <= *bin { *left } else { *right } as usize,
                RegNode::Leaf { value } => return *value,
            }
        }
    }
}

/// A boosted ensemble: initial per-class scores plus weighted rounds of one
/// tree per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gbm {
    init: Vec<f64>,
    rounds: Vec<(f64, Vec<RegTree>)>,
}

impl Gbm {
    pub fn n_rounds(&self) -> usize {
        self.rounds.len()
    }

    pub fn class_scores(&self, row: &[f64]) -> Vec<f64> {
        let mut s = self.init.clone();
        for (w, trees) in &self.rounds {
            for (k, t) in trees.iter().enumerate() {
                s[k] += w * t.predict_row(row);
            }
        }
        s
    }

    /// Argmax of class scores; ties go to the smallest class index.
    pub fn predict(&self, x: &Matrix) -> Vec<usize> {
        x.iter_rows().map(|r| argmax(&self.class_scores(r))).collect()
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b || m < a {
        a
    } else {
        m
    }
}

/// Upper bin edges of a column: midpoints between consecutive distinct
/// values, thinned to quantiles when there are more than `max_bins` values.
fn bin_edges(col: &[f64], max_bins: usize) -> Vec<f64> {
    let mut sorted = col.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct: Vec<(f64, usize)> = Vec::new();
    for v in sorted {
        match distinct.last_mut() {
            Some((u, c)) if *u == v => *c += 1,
            _ => distinct.push((v, 1)),
        }
    }
    let mut edges = Vec::new();
    if distinct.len() <= max_bins {
        for w in distinct.windows(2) {
            edges.push(midpoint(w[0].0, w[1].0));
        }
        return edges;
    }
    let n = col.len() as f64;
    let per_bin = n / max_bins as f64;
    let mut cum = 0usize;
    let mut next_target = per_bin;
    for i in 0..distinct.len() - 1 {
        cum += distinct[i].1;
        if cum as f64 >= next_target {
            edges.push(midpoint(distinct[i].0, distinct[i + 1].0));
            while next_target <= cum as f64 {
                next_target += per_bin;
            }
            if edges.len() == max_bins - 1 {
                break;
            }
        }
    }
    edges
}

struct Binned {
    /// Column-major bin codes, `bins[f][r]`.
    bins: Vec<Vec<u8>>,
    /// Row-major copy, `rows[r * d + f]`, for histogram accumulation.
    row_major: Vec<u8>,
    edges: Vec<Vec<f64>>,
    /// Start of each feature's bins in a flat histogram.
    offsets: Vec<usize>,
}

fn bin_features(x: &Matrix, max_bins: usize) -> Binned {
    let max_bins = max_bins.clamp(2, 256);
    let cols = x.columns();
    let edges: Vec<Vec<f64>> = cols.iter().map(|c| bin_edges(c, max_bins)).collect();
    let bins: Vec<Vec<u8>> = cols
        .iter()
        .zip(&edges)
        .map(|(c, e)| c.iter().map(|&v| e.partition_point(|&t| t < v) as u8).collect())
        .collect();
    let (n, d) = (x.rows(), cols.len());
    let mut row_major = vec![0u8; n * d];
    for (f, col) in bins.iter().enumerate() {
        for (r, &b) in col.iter().enumerate() {
            row_major[r * d + f] = b;
        }
    }
    let mut offsets = Vec::with_capacity(d + 1);
    offsets.push(0);
    for e in &edges {
        offsets.push(offsets.last().unwrap() + e.len() + 1);
    }
    Binned {
        bins,
        row_major,
        edges,
        offsets,
    }
}

/// Gradient sum, hessian sum and row count of one histogram bin.
#[derive(Debug, Clone, Copy, Default)]
struct Bin {
    g: f64,
    h: f64,
    n: u32,
}

struct TreeFitter<'a> {
    data: &'a Binned,
    params: &'a GbmParams,
    grad: &'a [f64],
    hess: &'a [f64],
}

impl TreeFitter<'_> {
    fn leaf_value(&self, g: f64, h: f64) -> f64 {
        -g / (h + self.params.lambda)
    }

    fn fit(self, rows: &mut [u32]) -> RegTree {
        let mut nodes = vec![RegNode::Leaf { value: 0.0 }];
        let hist = self.splittable(rows.len(), 0).then(|| self.histogram(rows));
        self.grow(rows, 0, 0, &mut nodes, hist);
        RegTree { nodes }
    }

    /// Whether a node of `n` rows at `depth` may be split (and so needs a
    /// histogram).
    fn splittable(&self, n: usize, depth: usize) -> bool {
        depth < self.params.max_depth && n >= 2 * self.params.min_child_samples.max(1)
    }

    fn histogram(&self, rows: &[u32]) -> Vec<Bin> {
        let d = self.data.edges.len();
        let offsets = &self.data.offsets;
        let mut hist = vec![Bin::default(); offsets[d]];
        for &r in rows {
            let r = r as usize;
            let (g, h) = (self.grad[r], self.hess[r]);
            for (f, &b) in self.data.row_major[r * d..(r + 1) * d].iter().enumerate() {
                let bin = &mut hist[offsets[f] + b as usize];
                bin.g += g;
                bin.h += h;
                bin.n += 1;
            }
        }
        hist
    }

    /// `hist` is present exactly when the node is splittable.
    fn grow(&self, rows: &mut [u32], depth: usize, id: usize, nodes: &mut Vec<RegNode>, hist: Option<Vec<Bin>>) {
        let (g, h) = rows.iter().fold((0.0, 0.0), |(g, h), &r| {
            (g + self.grad[r as usize], h + self.hess[r as usize])
        });
        let split = hist.as_ref().and_then(|hist| self.best_split(hist, rows.len(), g, h));
        let Some((feature, bin)) = split else {
            nodes[id] = RegNode::Leaf {
                value: self.leaf_value(g, h),
            };
            return;
        };
        let col = &self.data.bins[feature];
        let mut mid = 0;
        for i in 0..rows.len() {
            if col[rows[i] as usize] <= bin {
                rows.swap(i, mid);
                mid += 1;
            }
        }
        let left = nodes.len();
        nodes.push(RegNode::Leaf { value: 0.0 });
        nodes.push(RegNode::Leaf { value: 0.0 });
        nodes[id] = RegNode::Split {
            feature: feature as u32,
            bin,
            threshold: self.data.edges[feature][bin as usize],
            left: left as u32,
            right: (left + 1) as u32,
        };
        let (l, r) = rows.split_at_mut(mid);
        let (l_split, r_split) = (self.splittable(l.len(), depth + 1), self.splittable(r.len(), depth + 1));
        // accumulate the smaller child; the larger is the parent minus it
        let (l_hist, r_hist) = match (l_split, r_split) {
            (false, false) => (None, None),
            (true, false) => (Some(self.histogram(l)), None),
            (false, true) => (None, Some(self.histogram(r))),
            (true, true) => {
                let mut parent = hist.unwrap();
                let small_is_left = l.len() <= r.len();
                let small = self.histogram(if small_is_left { l } else { r });
                for (p, s) in parent.iter_mut().zip(&small) {
                    p.g -= s.g;
                    p.h -= s.h;
                    p.n -= s.n;
                }
                if small_is_left {
                    (Some(small), Some(parent))
                } else {
                    (Some(parent), Some(small))
                }
            }
        };
        self.grow(l, depth + 1, left, nodes, l_hist);
        self.grow(r, depth + 1, left + 1, nodes, r_hist);
    }

    fn best_split(&self, hist: &[Bin], n: usize, g: f64, h: f64) -> Option<(usize, u8)> {
        let lambda = self.params.lambda;
        let min_child = self.params.min_child_samples.max(1);
        let parent = g * g / (h + lambda);
        let mut best: Option<(f64, usize, u8)> = None;
        for (f, edges) in self.data.edges.iter().enumerate() {
            let n_edges = edges.len();
            let start = self.data.offsets[f];
            let (mut gl, mut hl, mut nl) = (0.0, 0.0, 0usize);
            for (b, bin) in hist[start..start + n_edges].iter().enumerate() {
                gl += bin.g;
                hl += bin.h;
                nl += bin.n as usize;
                if nl < min_child {
                    continue;
                }
                if n - nl < min_child {
                    break;
                }
                let (gr, hr) = (g - gl, h - hl);
                if hl < MIN_CHILD_HESSIAN || hr < MIN_CHILD_HESSIAN {
                    continue;
                }
                let gain = gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent;
                if gain > 1e-12 && best.is_none_or(|(bg, _, _)| gain > bg) {
                    best = Some((gain, f, b as u8));
                }
            }
        }
        best.map(|(_, f, b)| (f, b))
    }
}

/// Fits one model per entry of `stages` (ascending round counts); the model
/// for stage `m` is exactly the model a fit with `n_estimators = m` and the
/// same seed would produce, so a grid over round counts costs one fit.
pub fn fit_gbm_staged(train: &Dataset, params: &GbmParams, seed: u64, stages: &[usize]) -> Result<Vec<Gbm>> {
    if !(params.learning_rate >= 0.0 && params.learning_rate.is_finite()) {
        return Err(Error::InvalidParameter(format!("learning rate {} must be non-negative", params.learning_rate)));
    }
    if stages.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter("stages must be ascending".into()));
    }
    let (n, k) = (train.n_rows(), train.class_count());
    let data = bin_features(train.features(), params.max_bins);
    let counts = train.class_counts();
    let init: Vec<f64> = counts.iter().map(|&c| (c.max(1) as f64 / n as f64).ln()).collect();
    let y = train.target();
    let factor = k as f64 / (k as f64 - 1.0);
    let drop_rate = if params.boosting == Boosting::Dart { params.drop_rate } else { 0.0 };

    // scores[r * k + c]
    let mut scores: Vec<f64> = (0..n).flat_map(|_| init.iter().copied()).collect();
    let mut rounds: Vec<(f64, Vec<RegTree>)> = Vec::new();
    // unweighted train predictions of each round, `[r * k + c]`, kept for dart
    let mut round_preds: Vec<Vec<f64>> = Vec::new();
    let mut snapshots = Vec::with_capacity(stages.len());
    let mut stage_iter = stages.iter().peekable();
    while stage_iter.peek() == Some(&&0) {
        snapshots.push(Gbm {
            init: init.clone(),
            rounds: Vec::new(),
        });
        stage_iter.next();
    }
    let total = stages.last().copied().unwrap_or(0);
    let mut grad = vec![vec![0.0; n]; k];
    let mut hess = vec![vec![0.0; n]; k];
    let mut dropped_sum = vec![0.0; n * k];
    let mut rows: Vec<u32> = (0..n as u32).collect();
    let mut probs = vec![0.0; k];
    for round in 0..total {
        let dropped: Vec<usize> = if drop_rate > 0.0 && round > 0 {
            let mut rng = seed::rng(seed::derive(seed, &[round as u64]));
            (0..round).filter(|_| rng.random_bool(drop_rate)).collect()
        } else {
            Vec::new()
        };
        dropped_sum.iter_mut().for_each(|v| *v = 0.0);
        for &j in &dropped {
            let w = rounds[j].0;
            for (acc, p) in dropped_sum.iter_mut().zip(&round_preds[j]) {
                *acc += w * p;
            }
        }
        for r in 0..n {
            let s = &scores[r * k..(r + 1) * k];
            let m = s
                .iter()
                .zip(&dropped_sum[r * k..])
                .map(|(a, b)| a - b)
                .fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for c in 0..k {
                probs[c] = (s[c] - dropped_sum[r * k + c] - m).exp();
                z += probs[c];
            }
            for c in 0..k {
                let p = probs[c] / z;
                grad[c][r] = p - f64::from(u8::from(y[r] == c));
                hess[c][r] = (factor * p * (1.0 - p)).max(1e-16);
            }
        }
        let trees: Vec<RegTree> = (0..k)
            .map(|c| {
                TreeFitter {
                    data: &data,
                    params,
                    grad: &grad[c],
                    hess: &hess[c],
                }
                .fit(&mut rows)
            })
            .collect();
        let kd = dropped.len() as f64;
        let weight = params.learning_rate / (kd + 1.0);
        let shrink = kd / (kd + 1.0);
        for &j in &dropped {
            rounds[j].0 *= shrink;
        }
        let mut preds = vec![0.0; n * k];
        for r in 0..n {
            for (c, t) in trees.iter().enumerate() {
                let i = r * k + c;
                preds[i] = t.predict_binned(&data.bins, r);
                scores[i] += weight * preds[i] - (1.0 - shrink) * dropped_sum[i];
            }
        }
        if drop_rate > 0.0 {
            round_preds.push(preds);
        }
        rounds.push((weight, trees));
        while stage_iter.peek() == Some(&&(round + 1)) {
            snapshots.push(Gbm {
                init: init.clone(),
                rounds: rounds.clone(),
            });
            stage_iter.next();
        }
    }
    Ok(snapshots)
}

pub fn fit_gbm(train: &Dataset, params: &GbmParams, seed: u64) -> Result<Gbm> {
    Ok(fit_gbm_staged(train, params, seed, &[params.n_estimators])?.pop().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::accuracy;
    use rand_distr::{Distribution, StandardNormal};

    fn blobs(n: usize, c: usize, seed: u64) -> Dataset {
        let mut rng = seed::rng(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let m = (i % c) as f64 * 4.0;
                (0..3).map(|_| m + <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)).collect()
            })
            .collect();
        Dataset::from_columns(&Matrix::from_rows(&rows).columns(), (0..n).map(|i| i % c).collect(), c).unwrap()
    }

    #[test]
    fn separable_blobs() {
        for c in [2, 3] {
            let (train, test) = (blobs(300, c, 1), blobs(300, c, 2));
            for b in [Boosting::Standard, Boosting::Dart] {
                let m = fit_gbm(&train, &GbmParams::new(b, 0.1, 50), 3).unwrap();
                let acc = accuracy(&m.predict(test.features()), test.target());
                assert!(acc >= 0.95, "{c} {b:?} {acc}");
            }
        }
    }

    #[test]
    fn zero_learning_rate_predicts_majority() {
        let mut ds = blobs(90, 3, 4);
        let mut y = ds.target().to_vec();
        y[0] = 2;
        y[3] = 2;
        ds = Dataset::new(ds.features().clone(), y, ds.feature_names().to_vec(), 3).unwrap();
        let m = fit_gbm(&ds, &GbmParams::new(Boosting::Standard, 0.0, 10), 0).unwrap();
        assert!(m.predict(ds.features()).iter().all(|&p| p == 2));
    }

    #[test]
    fn dart_without_drops_is_standard() {
        let ds = blobs(120, 3, 5);
        let mut p = GbmParams::new(Boosting::Dart, 0.1, 20);
        p.drop_rate = 0.0;
        let a = fit_gbm(&ds, &p, 7).unwrap();
        let b = fit_gbm(&ds, &GbmParams::new(Boosting::Standard, 0.1, 20), 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stages_match_separate_fits() {
        let ds = blobs(150, 3, 6);
        let p = GbmParams::new(Boosting::Dart, 0.1, 30);
        let staged = fit_gbm_staged(&ds, &p, 11, &[12, 30]).unwrap();
        let mut small = p;
        small.n_estimators = 12;
        assert_eq!(staged[0], fit_gbm(&ds, &small, 11).unwrap());
        assert_eq!(staged[1], fit_gbm(&ds, &p, 11).unwrap());
    }

    #[test]
    fn edges_respect_bin_cap() {
        let col: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let e = bin_edges(&col, 255);
        assert!(e.len() <= 254 && e.len() > 200);
        assert!(e.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(bin_edges(&[1.0, 1.0, 2.0], 255), vec![1.5]);
    }
}
