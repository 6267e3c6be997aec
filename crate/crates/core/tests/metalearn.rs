//! Meta-learner, metric, evaluation and persistence properties.

use metasel::metalearn::container::{model_from_bytes, model_to_bytes};
use metasel::metalearn::*;
use metasel::modelzoo::{default_grid, MetaDataset};
use metasel::synthgen::{generate, sample_spec, Profile};
use metasel::weak_learners::tree::{Criterion, MaxFeatures};
use proptest::prelude::*;

/// Per-label confusion counts by brute force, then the macro conventions.
fn oracle(pred: &[Vec<bool>], truth: &[Vec<bool>]) -> (f64, f64, f64, f64, f64) {
    let p = truth[0].len();
    let mut wrong = 0.0;
    let mut sums = [0.0f64; 4];
    for j in 0..p {
        let mut c = [[0usize; 2]; 2]; // c[pred][truth]
        for i in 0..truth.len() {
            c[pred[i][j] as usize][truth[i][j] as usize] += 1;
            if pred[i][j] != truth[i][j] {
                wrong += 1.0;
            }
        }
        let (tp, fp, tn, fn_) = (c[1][1] as f64, c[1][0] as f64, c[0][0] as f64, c[0][1] as f64);
        let prec = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let rec = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
        let spec = if tn + fp > 0.0 { tn / (tn + fp) } else { 1.0 };
        let f1 = if prec + rec > 0.0 { 2.0 * prec * rec / (prec + rec) } else { 0.0 };
        for (s, v) in sums.iter_mut().zip([prec, rec, spec, f1]) {
            *s += v;
        }
    }
    let pf = p as f64;
    (wrong / (truth.len() as f64 * pf), sums[0] / pf, sums[1] / pf, sums[2] / pf, sums[3] / pf)
}

fn bits(rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<bool>>> {
    prop::collection::vec(prop::collection::vec(any::<bool>(), cols), rows)
}

proptest! {
    #[test]
    fn macro_metrics_match_oracle(pred in bits(5, 8), truth in bits(5, 8)) {
        let m = multilabel_metrics(&pred, &truth).unwrap();
        let (h, p, r, s, f) = oracle(&pred, &truth);
        prop_assert!((m.hamming_loss - h).abs() < 1e-12);
        prop_assert!((m.macro_precision - p).abs() < 1e-12);
        prop_assert!((m.macro_recall - r).abs() < 1e-12);
        prop_assert!((m.macro_specificity - s).abs() < 1e-12);
        prop_assert!((m.macro_f1 - f).abs() < 1e-12);
    }

    #[test]
    fn hamming_of_complement_sums_to_one(pred in bits(4, 6), truth in bits(4, 6)) {
        let neg: Vec<Vec<bool>> = pred.iter().map(|r| r.iter().map(|b| !b).collect()).collect();
        let a = multilabel_metrics(&pred, &truth).unwrap().hamming_loss;
        let b = multilabel_metrics(&neg, &truth).unwrap().hamming_loss;
        prop_assert!((a + b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hit_rate_is_argmax_invariant(
        scores in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 6), 1..10),
        truth_seed in any::<u64>(),
    ) {
        let truth: Vec<Vec<bool>> = scores
            .iter()
            .enumerate()
            .map(|(i, _)| (0..6).map(|j| (truth_seed >> ((i * 6 + j) % 64)) & 1 == 1).collect())
            .collect();
        let h = hit_rate(&scores, &truth).unwrap();
        let transformed: Vec<Vec<f64>> = scores.iter().map(|r| r.iter().map(|v| v.exp() * 3.0 + 1.0).collect()).collect();
        prop_assert_eq!(h, hit_rate(&transformed, &truth).unwrap());
        // brute force: count rows whose first maximal index is positive
        let mut hits = 0;
        for (s, t) in scores.iter().zip(&truth) {
            let mut best = 0;
            for j in 1..s.len() {
                if s[j] > s[best] { best = j; }
            }
            if t[best] { hits += 1; }
        }
        prop_assert!((h - hits as f64 / scores.len() as f64).abs() < 1e-15);
    }
}

#[test]
fn perfect_scores_hit_every_time() {
    let truth = vec![vec![false, true, true], vec![true, false, false]];
    let scores: Vec<Vec<f64>> = truth.iter().map(|t| t.iter().map(|&b| f64::from(u8::from(b))).collect()).collect();
    assert_eq!(hit_rate(&scores, &truth).unwrap(), 1.0);
}

fn constructed() -> MetaDataset {
    constructed_meta_dataset(300, 1, 11)
}

#[test]
fn learners_recover_the_determining_feature() {
    let md = constructed();
    for kind in [LearnerKind::Mlknn, LearnerKind::Birel, LearnerKind::Rakel] {
        let r = cross_validate_meta(&md, &LearnerConfig::default_for(kind), 5, 3).unwrap();
        assert!(r.hit_rate >= 0.9, "{} hit rate {}", kind.name(), r.hit_rate);
        assert_eq!(r.per_fold.len(), 5);
        let mean = r.per_fold.iter().map(|f| f.macro_f1).sum::<f64>() / 5.0;
        assert!((mean - r.macro_f1).abs() < 1e-12);
    }
}

#[test]
fn cross_validation_is_deterministic_with_equal_folds() {
    let md = constructed_meta_dataset(100, 1, 5);
    let cfg = LearnerConfig::default_for(LearnerKind::Birel);
    let a = cross_validate_meta(&md, &cfg, 5, 9).unwrap();
    let b = cross_validate_meta(&md, &cfg, 5, 9).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert!(a.per_fold.iter().all(|f| f.n_test == 20 && f.n_train == 80));
    assert!(cross_validate_meta(&md.subset(&[0, 1, 2]), &cfg, 5, 9).is_err());
}

#[test]
fn scores_lie_in_unit_interval() {
    let md = constructed_meta_dataset(80, 3, 2);
    let models = [
        fit_mlknn(&md, 5, 1.0).unwrap(),
        fit_binary_relevance(&md, Criterion::Entropy, MaxFeatures::Sqrt, 1).unwrap(),
        fit_rakel(&md, 3, None, Criterion::Gini, MaxFeatures::Log2, 1).unwrap(),
    ];
    for m in &models {
        for row in md.feature_rows() {
            let s = m.predict_scores(&row).unwrap();
            assert_eq!(s.len(), 24);
            assert!(s.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
    assert_eq!(models[1].tree_count(), 24);
    assert_eq!(models[2].tree_count(), 16);
    let covered: std::collections::BTreeSet<usize> = models[2].label_subsets().unwrap().into_iter().flatten().collect();
    assert_eq!(covered.len(), 24);
    assert!(fit_mlknn(&md, 80, 1.0).is_err());
}

#[test]
fn importance_ranks_the_determining_feature_first() {
    let md = constructed();
    let model = fit_binary_relevance(&md, Criterion::Gini, MaxFeatures::Sqrt, 4).unwrap();
    let rep = permutation_importance(&model, &md, 3, 8).unwrap();
    assert_eq!(rep.ranking[0], md.feature_names[DETERMINING_FEATURE]);
    for f in &rep.features[2..] {
        assert_eq!(f.mean_drop, 0.0, "{}", f.name);
        assert_eq!(f.std_drop, 0.0);
    }
    let single = permutation_importance(&model, &md, 1, 8).unwrap();
    assert!(single.features.iter().all(|f| f.std_drop == 0.0));
}

#[test]
fn container_round_trips_and_checks_version() {
    let md = constructed_meta_dataset(60, 1, 1);
    let grid = default_grid(50, 100).unwrap();
    let model = fit_rakel(&md, 3, None, Criterion::Gini, MaxFeatures::Sqrt, 2).unwrap().with_grid(grid).unwrap();
    let bytes = model_to_bytes(&model).unwrap();
    assert_eq!(&bytes[..4], b"MSEL");
    let back = model_from_bytes(&bytes).unwrap();
    assert_eq!(back, model);
    let mut wrong = bytes.clone();
    wrong[4] = 99;
    assert!(model_from_bytes(&wrong).is_err());
    assert!(model_from_bytes(b"nope").is_err());
}

#[test]
fn recommend_ranks_every_model_and_checks_schema() {
    let md = constructed_meta_dataset(60, 1, 1);
    let model = fit_mlknn(&md, 3, 1.0).unwrap().with_grid(default_grid(50, 100).unwrap()).unwrap();
    let ds = generate(&sample_spec(3, Profile::Desk)).unwrap();
    let recs = recommend(&model, &ds, 1).unwrap();
    assert_eq!(recs.len(), 24);
    assert!(recs.windows(2).all(|w| w[0].score >= w[1].score));
    assert!(recs.iter().all(|r| r.model.is_some()));
    // an 18-label model cannot take the 24-model grid
    let mut small = md.clone();
    small.label_names.truncate(18);
    for inst in &mut small.instances {
        inst.labels.bits.truncate(18);
        inst.labels.accuracies.truncate(18);
    }
    let m18 = fit_mlknn(&small, 3, 1.0).unwrap();
    assert!(m18.clone().with_grid(default_grid(50, 100).unwrap()).is_err());
}

#[test]
fn constant_label_gives_constant_birel_score() {
    let md = constructed_meta_dataset(40, 2, 4);
    let mut all_pos = md.clone();
    for inst in &mut all_pos.instances {
        inst.labels.bits[0] = true;
    }
    let m = fit_binary_relevance(&all_pos, Criterion::Gini, MaxFeatures::All, 0).unwrap();
    for row in md.feature_rows() {
        assert_eq!(m.predict_scores(&row).unwrap()[0], 1.0);
    }
}
