//! The 62 statistical meta-features of a classification dataset.

pub mod basic;
pub mod info;
pub mod landmark;
pub mod neighborhood;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::stats::Standardizer;
use crate::tabular::Dataset;

pub use basic::{
    class_distribution_stats, class_entropy, corr_ff_stats, count_normal_features, covariance_signed, dispersion,
    max_eigenvalue, signed_stats, skew_kurtosis_signed, variance_stats, SignedStats,
};
pub use info::{corr_fc_stats, feature_class_mi, mutual_info_fc, n_equiv_features, uncertainty_stats};
pub use landmark::{landmark_features, Landmarks};
pub use neighborhood::{fuzzy_partition_coefficient, neg_outlier_factor, presum_correct_stats, shared_graph};

/// Significance level of the per-feature normality test.
pub const NORMALITY_ALPHA: f64 = 0.05;

/// Canonical meta-feature names, in output order.
pub const META_FEATURE_NAMES: [&str; 62] = [
    "n_features",
    "n_instances",
    "n_classes",
    "n_normal_features",
    "max_eigenvalue",
    "class_entropy",
    "min_class_distribution",
    "max_class_distribution",
    "mean_class_distribution",
    "std_class_distribution",
    "min_corr_ff",
    "max_corr_ff",
    "mean_corr_ff",
    "std_corr_ff",
    "min_corr_fc",
    "max_corr_fc",
    "mean_corr_fc",
    "std_corr_fc",
    "fuzzy_part_coeff",
    "min_presum_correct",
    "max_presum_correct",
    "mean_presum_correct",
    "std_presum_correct",
    "neg_outlier_factor",
    "min_variance",
    "max_variance",
    "mean_variance",
    "std_variance",
    "max_neg_cov",
    "max_pos_cov",
    "mean_pos_cov",
    "mean_neg_cov",
    "std_pos_cov",
    "std_neg_cov",
    "max_neg_skew",
    "std_neg_skew",
    "mean_neg_skew",
    "max_pos_skew",
    "std_pos_skew",
    "mean_pos_skew",
    "max_neg_kurtosis",
    "std_neg_kurtosis",
    "mean_neg_kurtosis",
    "max_pos_kurtosis",
    "std_pos_kurtosis",
    "mean_pos_kurtosis",
    "dispersion",
    "n_equiv_features",
    "min_uncertainty",
    "max_uncertainty",
    "mean_uncertainty",
    "std_uncertainty",
    "1nn_mean_acc",
    "lda_mean_acc",
    "nb_mean_acc",
    "dt_mean_acc",
    "dt_leaves",
    "dt_depth",
    "max_gini_importance",
    "min_gini_importance",
    "mean_gini_importance",
    "std_gini_importance",
];

/// Number of meta-features.
pub const META_FEATURE_COUNT: usize = META_FEATURE_NAMES.len();

/// The 62 meta-feature values of one dataset, in canonical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaFeatureVector {
    values: Vec<f64>,
}

impl MetaFeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != META_FEATURE_COUNT {
            return Err(Error::DimensionMismatch(format!(
                "meta-feature vector has {} values, expected {META_FEATURE_COUNT}",
                values.len()
            )));
        }
        Ok(MetaFeatureVector { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn names() -> &'static [&'static str] {
        &META_FEATURE_NAMES
    }

    /// Value of a named meta-feature.
    pub fn get(&self, name: &str) -> Option<f64> {
        META_FEATURE_NAMES.iter().position(|&n| n == name).map(|i| self.values[i])
    }
}

fn named<T>(feature: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::MetaFeature {
        feature,
        source: Box::new(e),
    })
}

/// Computes all 62 meta-features. Distance-based features see z-scored
/// columns; variances, covariances, moments and the eigenvalue use raw
/// values. Deterministic for a fixed seed.
pub fn extract_all(ds: &Dataset, seed: u64) -> Result<MetaFeatureVector> {
    let x = ds.features();
    let y = ds.target();
    let c = ds.class_count();
    let counts = ds.class_counts();
    let mut v = Vec::with_capacity(META_FEATURE_COUNT);

    v.push(ds.n_features() as f64);
    v.push(ds.n_rows() as f64);
    v.push(c as f64);
    v.push(count_normal_features(x, NORMALITY_ALPHA) as f64);
    v.push(max_eigenvalue(x));
    let entropy = class_entropy(&counts);
    v.push(entropy);
    let cd = class_distribution_stats(&counts);
    v.extend([cd.min, cd.max, cd.mean, cd.std]);
    let ff = corr_ff_stats(x);
    v.extend([ff.min, ff.max, ff.mean, ff.std]);
    let mi = feature_class_mi(x, y, seed::derive(seed, &[1]));
    let fc = corr_fc_stats(&mi);
    v.extend([fc.min, fc.max, fc.mean, fc.std]);

    let z = Standardizer::fit(x).transform(x);
    v.push(named("fuzzy_part_coeff", fuzzy_partition_coefficient(&z, c, seed::derive(seed, &[2])))?);
    let graph = shared_graph(&z, c);
    let pc = presum_correct_stats(&graph, y, c);
    v.extend([pc.min, pc.max, pc.mean, pc.std]);
    v.push(neg_outlier_factor(&graph));
    drop(graph);

    let var = variance_stats(x);
    v.extend([var.min, var.max, var.mean, var.std]);
    let cov = covariance_signed(x);
    v.extend([cov.neg_extreme, cov.pos_extreme, cov.pos_mean, cov.neg_mean, cov.pos_std, cov.neg_std]);
    let (skew, kurt) = skew_kurtosis_signed(x);
    for s in [skew, kurt] {
        v.extend([s.neg_extreme, s.neg_std, s.neg_mean, s.pos_extreme, s.pos_std, s.pos_mean]);
    }
    v.push(dispersion(&counts));
    v.push(n_equiv_features(entropy, &mi));
    let u = uncertainty_stats(entropy, &mi);
    v.extend([u.min, u.max, u.mean, u.std]);

    let lm = named("landmarks", landmark_features(ds, seed::derive(seed, &[3])))?;
    v.extend([lm.one_nn, lm.lda, lm.nb, lm.dt, lm.dt_leaves, lm.dt_depth]);
    v.extend([lm.gini.max, lm.gini.min, lm.gini.mean, lm.gini.std]);

    for (name, value) in META_FEATURE_NAMES.iter().zip(&v) {
        if !value.is_finite() {
            return Err(Error::MetaFeature {
                feature: name,
                source: Box::new(Error::InvalidDataset(format!("non-finite value {value}"))),
            });
        }
    }
    MetaFeatureVector::new(v)
}

/// Writes `dataset_id` plus the 62 canonical columns, one row per dataset.
pub fn write_meta_features_csv(path: &Path, rows: &[(String, MetaFeatureVector)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut header = vec!["dataset_id"];
    header.extend(META_FEATURE_NAMES);
    w.write_record(&header).map_err(|e| Error::csv(path, e))?;
    for (id, mf) in rows {
        let mut rec = vec![id.clone()];
        rec.extend(mf.values().iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a file produced by [`write_meta_features_csv`].
pub fn read_meta_features_csv(path: &Path) -> Result<Vec<(String, MetaFeatureVector)>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let header: Vec<String> = r.headers().map_err(|e| Error::csv(path, e))?.iter().map(String::from).collect();
    let expected: Vec<&str> = std::iter::once("dataset_id").chain(META_FEATURE_NAMES).collect();
    if header != expected {
        return Err(Error::SchemaMismatch(format!("{} does not carry the canonical meta-feature columns", path.display())));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let values = rec
            .iter()
            .skip(1)
            .map(|s| s.parse::<f64>().map_err(|e| Error::csv(path, format!("`{s}`: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        out.push((rec[0].to_string(), MetaFeatureVector::new(values)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn blobs(n: usize, c: usize, sep: f64, seed: u64) -> Dataset {
        let mut rng = seed::rng(seed);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let cls = (i % c) as f64;
                vec![cls * sep + noise.sample(&mut rng), noise.sample(&mut rng), rng.random::<f64>()]
            })
            .collect();
        let y = (0..n).map(|i| i % c).collect();
        Dataset::new(Matrix::from_rows(&rows), y, vec!["a".into(), "b".into(), "c".into()], c).unwrap()
    }

    #[test]
    fn names_are_unique() {
        let mut n = META_FEATURE_NAMES.to_vec();
        n.sort();
        n.dedup();
        assert_eq!(n.len(), 62);
    }

    #[test]
    fn easy_blobs() {
        let ds = blobs(300, 3, 12.0, 1);
        let mf = extract_all(&ds, 7).unwrap();
        assert_eq!(mf.values().len(), 62);
        assert!(mf.values().iter().all(|v| v.is_finite()));
        assert!((mf.get("class_entropy").unwrap() - 3f64.log2()).abs() < 1e-12);
        assert!((mf.get("mean_class_distribution").unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(mf.get("1nn_mean_acc").unwrap() >= 0.95);
        let fpc = mf.get("fuzzy_part_coeff").unwrap();
        assert!((1.0 / 3.0..=1.0).contains(&fpc));
        assert_eq!(extract_all(&ds, 7).unwrap(), mf);
    }

    #[test]
    fn csv_round_trip() {
        let ds = blobs(60, 2, 5.0, 2);
        let mf = extract_all(&ds, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("mf.csv");
        write_meta_features_csv(&p, &[("d0".into(), mf.clone())]).unwrap();
        let back = read_meta_features_csv(&p).unwrap();
        assert_eq!(back, vec![("d0".to_string(), mf)]);
    }
}
