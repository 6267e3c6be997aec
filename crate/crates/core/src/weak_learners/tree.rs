//! CART classification tree.
//!
//! Splits are axis-aligned at midpoints between consecutive distinct values
//! and a row goes left when `x <= threshold`. Growth stops when a node is pure,
//! has fewer than `min_samples_split` rows, reaches `max_depth`, or has no
//! feature with two distinct values. A zero-gain split is still taken, which
//! is what lets a greedy tree solve XOR.
//!
//! The builder keeps one presorted slot order per feature and partitions them
//! stably at each split, so a level costs `O(d * n)` instead of a sort.
//! Repeated rows (bootstrap samples) share one slot carrying their
//! multiplicity as an integer weight, which yields the same tree as fitting
//! the copies individually.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::stats::argmax;
use crate::tabular::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Gini,
    Entropy,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::Gini => "gini",
            Criterion::Entropy => "entropy",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gini" => Ok(Criterion::Gini),
            "entropy" => Ok(Criterion::Entropy),
            other => Err(Error::InvalidParameter(format!("unknown criterion `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    Sqrt,
    Log2,
    All,
}

impl MaxFeatures {
    /// Number of non-constant features examined per node.
    pub fn count(self, d: usize) -> usize {
        let m = match self {
            MaxFeatures::Sqrt => (d as f64).sqrt().floor() as usize,
            MaxFeatures::Log2 => (d as f64).log2().floor() as usize,
            MaxFeatures::All => d,
        };
        m.clamp(1, d.max(1))
    }

    pub fn name(self) -> &'static str {
        match self {
            MaxFeatures::Sqrt => "sqrt",
            MaxFeatures::Log2 => "log2",
            MaxFeatures::All => "all",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sqrt" => Ok(MaxFeatures::Sqrt),
            "log2" => Ok(MaxFeatures::Log2),
            "all" | "none" | "None" => Ok(MaxFeatures::All),
            other => Err(Error::InvalidParameter(format!("unknown max_features `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub criterion: Criterion,
    pub max_features: MaxFeatures,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl TreeParams {
    pub fn new(criterion: Criterion, max_features: MaxFeatures) -> Self {
        TreeParams {
            criterion,
            max_features,
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        class: u32,
        distribution: Vec<f64>,
    },
}

/// A fitted classification tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    nodes: Vec<Node>,
    class_count: usize,
    leaf_count: usize,
    depth: usize,
    gini_importances: Vec<f64>,
}

impl TreeModel {
    pub fn leaf_count(&self) -> usize {
        self.leaf_count
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Impurity decrease per feature normalized to sum to one; all zeros when
    /// no split reduced impurity.
    pub fn gini_importances(&self) -> &[f64] {
        &self.gini_importances
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    fn leaf(&self, row: &[f64]) -> &Node {
        let mut idx = 0usize;
        loop {
            match &self.nodes[idx] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if row[*feature as usize] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
                leaf => return leaf,
            }
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> usize {
        match self.leaf(row) {
            Node::Leaf { class, .. } => *class as usize,
            Node::Split { .. } => unreachable!(),
        }
    }

    /// Class frequencies in the leaf reached by `row`.
    pub fn predict_proba_row(&self, row: &[f64]) -> &[f64] {
        match self.leaf(row) {
            Node::Leaf { distribution, .. } => distribution,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn predict(&self, x: &crate::matrix::Matrix) -> Vec<usize> {
        x.iter_rows().map(|r| self.predict_row(r)).collect()
    }
}

/// Fits an unbounded-depth tree on the whole dataset.
pub fn fit_tree(train: &Dataset, criterion: Criterion, max_features: MaxFeatures, seed: u64) -> TreeModel {
    let columns = train.features().columns();
    let rows: Vec<usize> = (0..train.n_rows()).collect();
    TreeBuilder::new(&columns, train.target(), train.class_count())
        .fit(&rows, &TreeParams::new(criterion, max_features), seed)
}

/// Column-major view of training data shared by many tree fits.
pub struct TreeBuilder<'a> {
    columns: &'a [Vec<f64>],
    target: &'a [usize],
    class_count: usize,
    /// Row indices sorted by value, per feature.
    presorted: Option<Vec<Vec<u32>>>,
}

impl<'a> TreeBuilder<'a> {
    pub fn new(columns: &'a [Vec<f64>], target: &'a [usize], class_count: usize) -> Self {
        TreeBuilder {
            columns,
            target,
            class_count,
            presorted: None,
        }
    }

    /// Sorts every column once so later fits on row subsets or bootstrap
    /// samples skip the per-tree sort.
    pub fn presort(mut self) -> Self {
        let n = self.target.len();
        self.presorted = Some(
            self.columns
                .iter()
                .map(|col| {
                    let mut idx: Vec<u32> = (0..n as u32).collect();
                    idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
                    idx
                })
                .collect(),
        );
        self
    }

    /// Fits on `rows`, which may repeat (bootstrap samples).
    pub fn fit(&self, rows: &[usize], params: &TreeParams, seed: u64) -> TreeModel {
        let d = self.columns.len();
        let m = rows.len();
        // unique rows in ascending order, each with its multiplicity
        let mut multiplicity = vec![0u32; self.target.len()];
        for &r in rows {
            multiplicity[r] += 1;
        }
        let unique: Vec<usize> = (0..self.target.len()).filter(|&r| multiplicity[r] > 0).collect();
        let slot_w: Vec<u32> = unique.iter().map(|&r| multiplicity[r]).collect();
        let slot_y: Vec<u32> = unique.iter().map(|&r| self.target[r] as u32).collect();
        let orders = self.slot_orders(&unique);
        let u = unique.len();
        let mut state = BuildState {
            builder: self,
            slot_y,
            slot_w,
            orders,
            tmp: vec![Entry { value: 0.0, slot: 0 }; u],
            goes_left: vec![false; u],
            nlogn: if params.criterion == Criterion::Entropy {
                (0..=m).map(|v| if v == 0 { 0.0 } else { v as f64 * (v as f64).ln() }).collect()
            } else {
                Vec::new()
            },
            nodes: Vec::new(),
            importances: vec![0.0; d],
            leaf_count: 0,
            depth: 0,
            rng: seed::rng(seed),
            params: *params,
        };
        state.build(u, m);
        let total: f64 = state.importances.iter().sum();
        let gini_importances = if total > 0.0 {
            state.importances.iter().map(|v| v / total).collect()
        } else {
            vec![0.0; d]
        };
        TreeModel {
            nodes: state.nodes,
            class_count: self.class_count,
            leaf_count: state.leaf_count,
            depth: state.depth,
            gini_importances,
        }
    }

    /// Per feature, the slots of `rows` (distinct, ascending) sorted by
    /// value, ties by row.
    fn slot_orders(&self, rows: &[usize]) -> Vec<Vec<Entry>> {
        match &self.presorted {
            Some(pre) => {
                let mut slot_of = vec![u32::MAX; self.target.len()];
                for (s, &r) in rows.iter().enumerate() {
                    slot_of[r] = s as u32;
                }
                pre.iter()
                    .zip(self.columns)
                    .map(|(order, col)| {
                        order
                            .iter()
                            .filter_map(|&r| {
                                let slot = slot_of[r as usize];
                                (slot != u32::MAX).then(|| Entry {
                                    value: col[r as usize],
                                    slot,
                                })
                            })
                            .collect()
                    })
                    .collect()
            }
            None => self
                .columns
                .iter()
                .map(|col| {
                    let mut order: Vec<Entry> = rows
                        .iter()
                        .enumerate()
                        .map(|(s, &r)| Entry {
                            value: col[r],
                            slot: s as u32,
                        })
                        .collect();
                    // slots ascend with rows, so the slot breaks ties by row
                    order.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.slot.cmp(&b.slot)));
                    order
                })
                .collect(),
        }
    }
}

/// A slot of the fitted sample with its value in one feature.
#[derive(Debug, Clone, Copy)]
struct Entry {
    value: f64,
    slot: u32,
}

struct BuildState<'b, 'a> {
    builder: &'b TreeBuilder<'a>,
    slot_y: Vec<u32>,
    /// Multiplicity of each slot's row in the fitted sample.
    slot_w: Vec<u32>,
    /// Per feature, the node's slots sorted by value within each node range.
    orders: Vec<Vec<Entry>>,
    tmp: Vec<Entry>,
    goes_left: Vec<bool>,
    nlogn: Vec<f64>,
    nodes: Vec<Node>,
    importances: Vec<f64>,
    leaf_count: usize,
    depth: usize,
    rng: seed::Rng,
    params: TreeParams,
}

struct BestSplit {
    feature: usize,
    /// Number of samples sent left.
    left: usize,
    /// Number of slots sent left.
    left_slots: usize,
    threshold: f64,
    cost: f64,
}

impl BuildState<'_, '_> {
    /// Weighted impurity of a node in count units (n * impurity).
    fn node_cost(&self, counts: &[usize], n: usize) -> f64 {
        let nf = n as f64;
        match self.params.criterion {
            Criterion::Gini => {
                let sq: f64 = counts.iter().map(|&c| (c * c) as f64).sum();
                nf - sq / nf
            }
            Criterion::Entropy => {
                self.nlogn[n] - counts.iter().map(|&c| self.nlogn[c]).sum::<f64>()
            }
        }
    }

    /// Grows the tree over `u` slots holding `m` samples in total.
    fn build(&mut self, u: usize, m: usize) {
        let c = self.builder.class_count;
        // (start, end, depth, node index)
        // (start, end, depth, node index, samples)
        let mut stack = vec![(0usize, u, 0usize, 0usize, m)];
        self.nodes.push(Node::Leaf {
            class: 0,
            distribution: Vec::new(),
        });
        let mut counts = vec![0usize; c];
        while let Some((start, end, depth, id, n)) = stack.pop() {
            counts.iter_mut().for_each(|v| *v = 0);
            for e in &self.orders[0][start..end] {
                counts[self.slot_y[e.slot as usize] as usize] += self.slot_w[e.slot as usize] as usize;
            }
            let pure = counts.iter().filter(|&&v| v > 0).count() <= 1;
            let depth_capped = self.params.max_depth.is_some_and(|md| depth >= md);
            let split = if pure || n < self.params.min_samples_split || depth_capped {
                None
            } else {
                self.best_split(start, end, n, &counts)
            };
            let Some(best) = split else {
                let dist: Vec<f64> = counts.iter().map(|&v| v as f64 / n as f64).collect();
                self.nodes[id] = Node::Leaf {
                    class: argmax(&dist) as u32,
                    distribution: dist,
                };
                self.leaf_count += 1;
                self.depth = self.depth.max(depth);
                continue;
            };
            let parent_cost = self.node_cost(&counts, n);
            self.importances[best.feature] += (parent_cost - best.cost).max(0.0);
            self.partition(start, end, best.feature, best.left_slots);
            let left_id = self.nodes.len();
            let leaf = || Node::Leaf {
                class: 0,
                distribution: Vec::new(),
            };
            self.nodes.push(leaf());
            self.nodes.push(leaf());
            self.nodes[id] = Node::Split {
                feature: best.feature as u32,
                threshold: best.threshold,
                left: left_id as u32,
                right: (left_id + 1) as u32,
            };
            let mid = start + best.left_slots;
            stack.push((mid, end, depth + 1, left_id + 1, n - best.left));
            stack.push((start, mid, depth + 1, left_id, best.left));
        }
    }

    fn best_split(&mut self, start: usize, end: usize, n: usize, counts: &[usize]) -> Option<BestSplit> {
        let d = self.builder.columns.len();
        let wanted = self.params.max_features.count(d);
        let mut features: Vec<usize> = (0..d).collect();
        if wanted < d {
            features.shuffle(&mut self.rng);
        }
        let mut best: Option<BestSplit> = None;
        let mut visited = 0;
        for f in features {
            let order = &self.orders[f];
            if order[start].value == order[end - 1].value {
                continue;
            }
            if let Some(cand) = self.scan_feature(f, start, end, n, counts) {
                if best.as_ref().is_none_or(|b| improves(cand.cost, b.cost, n)) {
                    best = Some(cand);
                }
            }
            visited += 1;
            if visited >= wanted {
                break;
            }
        }
        best
    }

    fn scan_feature(&self, f: usize, start: usize, end: usize, n: usize, counts: &[usize]) -> Option<BestSplit> {
        let order = &self.orders[f];
        let slots = end - start;
        let c = counts.len();
        let mut left = vec![0usize; c];
        let mut right = counts.to_vec();
        let mut best: Option<BestSplit> = None;
        match self.params.criterion {
            Criterion::Gini => {
                let mut sq_left = 0.0f64;
                let mut sq_right: f64 = counts.iter().map(|&v| (v * v) as f64).sum();
                let mut nl = 0usize;
                for i in 0..slots - 1 {
                    let e = order[start + i];
                    let k = self.slot_y[e.slot as usize] as usize;
                    let w = self.slot_w[e.slot as usize] as usize;
                    sq_left += (2 * left[k] * w + w * w) as f64;
                    sq_right -= (2 * right[k] * w - w * w) as f64;
                    left[k] += w;
                    right[k] -= w;
                    nl += w;
                    let v = e.value;
                    let next = order[start + i + 1].value;
                    if v < next {
                        let cost = n as f64 - sq_left / nl as f64 - sq_right / (n - nl) as f64;
                        if best.as_ref().is_none_or(|b| improves(cost, b.cost, n)) {
                            best = Some(BestSplit {
                                feature: f,
                                left: nl,
                                left_slots: i + 1,
                                threshold: midpoint(v, next),
                                cost,
                            });
                        }
                    }
                }
            }
            Criterion::Entropy => {
                let t = &self.nlogn;
                let mut sum_left = 0.0f64;
                let mut sum_right: f64 = counts.iter().map(|&v| t[v]).sum();
                let mut nl = 0usize;
                for i in 0..slots - 1 {
                    let e = order[start + i];
                    let k = self.slot_y[e.slot as usize] as usize;
                    let w = self.slot_w[e.slot as usize] as usize;
                    sum_left += t[left[k] + w] - t[left[k]];
                    sum_right += t[right[k] - w] - t[right[k]];
                    left[k] += w;
                    right[k] -= w;
                    nl += w;
                    let v = e.value;
                    let next = order[start + i + 1].value;
                    if v < next {
                        let nr = n - nl;
                        let cost = (t[nl] - sum_left) + (t[nr] - sum_right);
                        if best.as_ref().is_none_or(|b| improves(cost, b.cost, n)) {
                            best = Some(BestSplit {
                                feature: f,
                                left: nl,
                                left_slots: i + 1,
                                threshold: midpoint(v, next),
                                cost,
                            });
                        }
                    }
                }
            }
        }
        best
    }

    fn partition(&mut self, start: usize, end: usize, feature: usize, n_left: usize) {
        let mid = start + n_left;
        for e in &self.orders[feature][start..mid] {
            self.goes_left[e.slot as usize] = true;
        }
        for e in &self.orders[feature][mid..end] {
            self.goes_left[e.slot as usize] = false;
        }
        for f in 0..self.orders.len() {
            if f == feature {
                continue;
            }
            let order = &mut self.orders[f];
            let mut li = start;
            let mut ri = 0;
            // branch-free: write both destinations, advance one
            for i in start..end {
                let e = order[i];
                let left = self.goes_left[e.slot as usize];
                order[li] = e;
                self.tmp[ri] = e;
                li += left as usize;
                ri += !left as usize;
            }
            debug_assert_eq!(li, mid);
            order[mid..end].copy_from_slice(&self.tmp[..ri]);
        }
    }
}

/// Costs within rounding noise count as ties, which go to the candidate seen
/// first; otherwise summation order would decide between equal splits.
fn improves(cost: f64, best: f64, n: usize) -> bool {
    cost < best - 1e-10 * n as f64
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b || m < a {
        a
    } else {
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::stats::accuracy;

    fn ds(rows: &[Vec<f64>], target: Vec<usize>) -> Dataset {
        let x = Matrix::from_rows(rows);
        let names = (0..x.cols()).map(|j| format!("f{j}")).collect();
        Dataset::new(x, target, names, 2).unwrap()
    }

    #[test]
    fn single_split_on_separable_feature() {
        let d = ds(&[vec![0.0], vec![0.2], vec![0.8], vec![1.0]], vec![0, 0, 1, 1]);
        let t = fit_tree(&d, Criterion::Gini, MaxFeatures::All, 0);
        assert_eq!((t.depth(), t.leaf_count()), (1, 2));
        assert_eq!(t.gini_importances(), &[1.0]);
        assert_eq!(t.predict_row(&[0.45]), 0);
        assert_eq!(t.predict_row(&[0.55]), 1);
    }

    #[test]
    fn pure_target_is_a_stump() {
        let x = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0], vec![2.0, 2.0]]);
        let rows: Vec<usize> = (0..3).collect();
        let cols = x.columns();
        let target = vec![1, 1, 1];
        let t = TreeBuilder::new(&cols, &target, 2).fit(&rows, &TreeParams::new(Criterion::Gini, MaxFeatures::All), 0);
        assert_eq!((t.depth(), t.leaf_count()), (0, 1));
        assert_eq!(t.gini_importances(), &[0.0, 0.0]);
        assert_eq!(t.predict_row(&[5.0, 5.0]), 1);
    }

    // Hand enumeration: every depth-1 split of XOR leaves both children at
    // gini 0.5 (zero gain); the greedy tree must still take one and then
    // separate each child with the other feature.
    #[test]
    fn xor_needs_depth_two() {
        let d = ds(
            &[vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![0, 0, 1, 1],
        );
        let t = fit_tree(&d, Criterion::Gini, MaxFeatures::All, 0);
        assert_eq!(t.depth(), 2);
        assert_eq!(t.leaf_count(), 4);
        assert_eq!(accuracy(&t.predict(d.features()), d.target()), 1.0);
        let imp = t.gini_importances();
        assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // root split on feature 0 carries zero gain; all importance is feature 1
        assert_eq!(imp, &[0.0, 1.0]);
    }

    #[test]
    fn entropy_and_gini_agree_on_clean_split() {
        let d = ds(&[vec![3.0], vec![1.0], vec![2.0], vec![4.0]], vec![1, 0, 0, 1]);
        for c in [Criterion::Gini, Criterion::Entropy] {
            let t = fit_tree(&d, c, MaxFeatures::All, 0);
            assert_eq!(t.leaf_count(), 2);
            assert_eq!(t.predict_row(&[2.5]), 0);
            assert_eq!(t.predict_row(&[2.51]), 1);
        }
    }

    #[test]
    fn presorted_and_bootstrap_match_direct_sort() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![((i * 7) % 13) as f64, ((i * 5) % 11) as f64, (i % 3) as f64])
            .collect();
        let target: Vec<usize> = (0..40).map(|i| usize::from((i * 7) % 13 > 5) ^ (i % 2)).collect();
        let x = Matrix::from_rows(&rows);
        let cols = x.columns();
        let sample: Vec<usize> = (0..40).map(|i| (i * 17 + 3) % 40).collect();
        let params = TreeParams::new(Criterion::Entropy, MaxFeatures::Sqrt);
        let a = TreeBuilder::new(&cols, &target, 2).fit(&sample, &params, 9);
        let b = TreeBuilder::new(&cols, &target, 2).presort().fit(&sample, &params, 9);
        assert_eq!(a, b);
    }

    #[test]
    fn depth_cap_is_respected() {
        let rows: Vec<Vec<f64>> = (0..32).map(|i| vec![i as f64]).collect();
        let target: Vec<usize> = (0..32).map(|i| i % 2).collect();
        let x = Matrix::from_rows(&rows);
        let cols = x.columns();
        let all: Vec<usize> = (0..32).collect();
        let mut p = TreeParams::new(Criterion::Gini, MaxFeatures::All);
        p.max_depth = Some(3);
        let t = TreeBuilder::new(&cols, &target, 2).fit(&all, &p, 0);
        assert!(t.depth() <= 3);
        assert!(t.leaf_count() <= 8);
    }

    #[test]
    fn max_features_counts() {
        assert_eq!(MaxFeatures::Sqrt.count(60), 7);
        assert_eq!(MaxFeatures::Log2.count(60), 5);
        assert_eq!(MaxFeatures::Log2.count(1), 1);
        assert_eq!(MaxFeatures::All.count(60), 60);
    }
}
