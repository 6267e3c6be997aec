//! Meta-datasets: one row per dataset with its meta-features and the label
//! vector over the model grid.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metafeatures::{extract_all, MetaFeatureVector, META_FEATURE_NAMES};
use crate::seed;
use crate::synthgen::Manifest;
use crate::tabular::load_csv;

use super::{label_dataset, LabelVector, ModelId, ThresholdMode};

/// One dataset of a meta-dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaInstance {
    pub dataset_id: String,
    pub features: Vec<f64>,
    pub labels: LabelVector,
}

/// Meta-instances with their feature and label schemas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaDataset {
    pub feature_names: Vec<String>,
    pub label_names: Vec<String>,
    pub instances: Vec<MetaInstance>,
}

impl MetaDataset {
    pub fn new(feature_names: Vec<String>, label_names: Vec<String>, instances: Vec<MetaInstance>) -> Result<Self> {
        let md = MetaDataset {
            feature_names,
            label_names,
            instances,
        };
        md.validate()?;
        Ok(md)
    }

    fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for inst in &self.instances {
            if !ids.insert(inst.dataset_id.as_str()) {
                return Err(Error::InvalidDataset(format!("duplicate dataset id `{}`", inst.dataset_id)));
            }
            if inst.features.len() != self.feature_names.len()
                || inst.labels.bits.len() != self.label_names.len()
                || inst.labels.accuracies.len() != self.label_names.len()
            {
                return Err(Error::DimensionMismatch(format!(
                    "instance `{}` does not match the {}-feature / {}-label schema",
                    inst.dataset_id,
                    self.feature_names.len(),
                    self.label_names.len()
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_labels(&self) -> usize {
        self.label_names.len()
    }

    /// Rows (in the given order) as a new meta-dataset with the same schema.
    pub fn subset(&self, rows: &[usize]) -> MetaDataset {
        MetaDataset {
            feature_names: self.feature_names.clone(),
            label_names: self.label_names.clone(),
            instances: rows.iter().map(|&i| self.instances[i].clone()).collect(),
        }
    }

    pub fn feature_rows(&self) -> Vec<Vec<f64>> {
        self.instances.iter().map(|i| i.features.clone()).collect()
    }

    pub fn label_bits(&self) -> Vec<Vec<bool>> {
        self.instances.iter().map(|i| i.labels.bits.clone()).collect()
    }

    /// Joins meta-feature rows with label rows by dataset id, keeping the
    /// order of `features`; ids missing from either side are dropped.
    pub fn join(features: &[(String, MetaFeatureVector)], labels: &[(String, LabelVector)], label_names: Vec<String>) -> Result<Self> {
        let by_id: HashMap<&str, &LabelVector> = labels.iter().map(|(id, l)| (id.as_str(), l)).collect();
        let instances = features
            .iter()
            .filter_map(|(id, f)| {
                by_id.get(id.as_str()).map(|l| MetaInstance {
                    dataset_id: id.clone(),
                    features: f.values().to_vec(),
                    labels: (*l).clone(),
                })
            })
            .collect();
        MetaDataset::new(META_FEATURE_NAMES.iter().map(|s| s.to_string()).collect(), label_names, instances)
    }

    /// CSV with `dataset_id`, the feature columns, `label_<model>` (0/1) and
    /// `acc_<model>` columns.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        let mut header = vec!["dataset_id".to_string()];
        header.extend(self.feature_names.iter().cloned());
        header.extend(self.label_names.iter().map(|l| format!("label_{l}")));
        header.extend(self.label_names.iter().map(|l| format!("acc_{l}")));
        w.write_record(&header).map_err(|e| Error::csv(path, e))?;
        for inst in &self.instances {
            let mut rec = vec![inst.dataset_id.clone()];
            rec.extend(inst.features.iter().map(|v| v.to_string()));
            rec.extend(inst.labels.bits.iter().map(|&b| u8::from(b).to_string()));
            rec.extend(inst.labels.accuracies.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let header: Vec<String> = r.headers().map_err(|e| Error::csv(path, e))?.iter().map(String::from).collect();
        if header.first().map(String::as_str) != Some("dataset_id") {
            return Err(Error::SchemaMismatch(format!("{}: first column must be dataset_id", path.display())));
        }
        let label_cols: Vec<usize> = (1..header.len()).filter(|&i| header[i].starts_with("label_")).collect();
        let acc_cols: Vec<usize> = (1..header.len()).filter(|&i| header[i].starts_with("acc_")).collect();
        let feature_cols: Vec<usize> = (1..header.len())
            .filter(|i| !label_cols.contains(i) && !acc_cols.contains(i))
            .collect();
        let label_names: Vec<String> = label_cols.iter().map(|&i| header[i]["label_".len()..].to_string()).collect();
        let acc_names: Vec<String> = acc_cols.iter().map(|&i| header[i]["acc_".len()..].to_string()).collect();
        if label_names != acc_names || label_names.is_empty() {
            return Err(Error::SchemaMismatch(format!(
                "{}: label_* and acc_* columns must name the same models",
                path.display()
            )));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::csv(path, format!("`{s}`: {e}")));
        let mut instances = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::csv(path, e))?;
            let features = feature_cols.iter().map(|&i| num(&rec[i])).collect::<Result<Vec<_>>>()?;
            let bits = label_cols
                .iter()
                .map(|&i| match &rec[i] {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(Error::csv(path, format!("label value `{other}` is not 0/1"))),
                })
                .collect::<Result<Vec<_>>>()?;
            let accuracies = acc_cols.iter().map(|&i| num(&rec[i])).collect::<Result<Vec<_>>>()?;
            let best_accuracy = accuracies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            instances.push(MetaInstance {
                dataset_id: rec[0].to_string(),
                features,
                labels: LabelVector {
                    bits,
                    best_accuracy,
                    accuracies,
                },
            });
        }
        MetaDataset::new(feature_cols.iter().map(|&i| header[i].clone()).collect(), label_names, instances)
    }
}

/// Writes per-dataset labels: `dataset_id`, `label_<model>`, `acc_<model>`.
pub fn write_labels_csv(path: &Path, label_names: &[String], rows: &[(String, LabelVector)]) -> Result<()> {
    let md = MetaDataset {
        feature_names: Vec::new(),
        label_names: label_names.to_vec(),
        instances: rows
            .iter()
            .map(|(id, l)| MetaInstance {
                dataset_id: id.clone(),
                features: Vec::new(),
                labels: l.clone(),
            })
            .collect(),
    };
    md.write_csv(path)
}

/// Reads a file written by [`write_labels_csv`].
pub fn read_labels_csv(path: &Path) -> Result<(Vec<String>, Vec<(String, LabelVector)>)> {
    let md = MetaDataset::read_csv(path)?;
    if md.n_features() != 0 {
        return Err(Error::SchemaMismatch(format!("{}: label file carries feature columns", path.display())));
    }
    Ok((md.label_names, md.instances.into_iter().map(|i| (i.dataset_id, i.labels)).collect()))
}

/// Seed of one dataset under a master seed (keyed by its id, so adding or
/// reordering datasets leaves the others unchanged).
pub fn dataset_seed(master_seed: u64, dataset_id: &str) -> u64 {
    seed::derive(master_seed, &[seed::hash_str(dataset_id)])
}

/// Seed passed to meta-feature extraction for a dataset.
pub fn extraction_seed(master_seed: u64, dataset_id: &str) -> u64 {
    seed::derive(dataset_seed(master_seed, dataset_id), &[0])
}

/// Seed passed to grid labeling for a dataset.
pub fn labeling_seed(master_seed: u64, dataset_id: &str) -> u64 {
    seed::derive(dataset_seed(master_seed, dataset_id), &[1])
}

/// Outcome of [`build_meta_dataset`].
#[derive(Debug, Clone)]
pub struct BuildSummary {
    pub meta: MetaDataset,
    /// Datasets taken over from an existing output file.
    pub reused: usize,
    /// Datasets that failed, with the reason.
    pub skipped: Vec<(String, String)>,
}

/// Extracts meta-features and labels for every manifest entry. When `out`
/// names an existing meta-dataset with the same schema, instances already
/// present there are reused; the file is rewritten after every batch, so an
/// interrupted build resumes where it stopped. Failures are recorded and
/// skipped. The result follows manifest order and does not depend on
/// scheduling.
pub fn build_meta_dataset(
    manifest: &Manifest,
    models: &[ModelId],
    threshold: f64,
    mode: ThresholdMode,
    master_seed: u64,
    out: Option<&Path>,
) -> Result<BuildSummary> {
    let feature_names: Vec<String> = META_FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    let label_names: Vec<String> = models.iter().map(ModelId::name).collect();
    let mut done: HashMap<String, MetaInstance> = HashMap::new();
    if let Some(path) = out.filter(|p| p.exists()) {
        let existing = MetaDataset::read_csv(path)?;
        if existing.feature_names != feature_names || existing.label_names != label_names {
            return Err(Error::SchemaMismatch(format!(
                "{} was built with a different schema; remove it or choose another output",
                path.display()
            )));
        }
        done = existing.instances.into_iter().map(|i| (i.dataset_id.clone(), i)).collect();
    }
    let listed: HashSet<&str> = manifest.entries.iter().map(|e| e.id.as_str()).collect();
    done.retain(|id, _| listed.contains(id.as_str()));
    let reused = done.len();
    let mut skipped = Vec::new();
    let todo: Vec<_> = manifest.entries.iter().filter(|e| !done.contains_key(&e.id)).collect();
    let batch = rayon::current_num_threads().max(1) * 4;
    let assemble = |done: &HashMap<String, MetaInstance>| -> Result<MetaDataset> {
        let instances = manifest.entries.iter().filter_map(|e| done.get(&e.id).cloned()).collect();
        MetaDataset::new(feature_names.clone(), label_names.clone(), instances)
    };
    for chunk in todo.chunks(batch) {
        let results: Vec<(String, Result<MetaInstance>)> = chunk
            .par_iter()
            .map(|e| {
                let run = || -> Result<MetaInstance> {
                    let ds = load_csv(&manifest.resolve(e), &e.target)?;
                    let mf = extract_all(&ds, extraction_seed(master_seed, &e.id))?;
                    let labels = label_dataset(&ds, models, threshold, mode, labeling_seed(master_seed, &e.id))?;
                    Ok(MetaInstance {
                        dataset_id: e.id.clone(),
                        features: mf.values().to_vec(),
                        labels,
                    })
                };
                (e.id.clone(), run())
            })
            .collect();
        for (id, r) in results {
            match r {
                Ok(inst) => {
                    done.insert(id, inst);
                }
                Err(err) => {
                    log::warn!("skipping dataset {id}: {err}");
                    skipped.push((id, err.to_string()));
                }
            }
        }
        if let Some(path) = out {
            assemble(&done)?.write_csv(path)?;
        }
        log::info!("meta-dataset: {} of {} datasets done", done.len(), manifest.entries.len());
    }
    let meta = assemble(&done)?;
    if let Some(path) = out {
        meta.write_csv(path)?;
    }
    Ok(BuildSummary { meta, reused, skipped })
}

/// Meta-features of every manifest dataset (seed [`extraction_seed`]), in
/// manifest order; each dataset's failure is reported separately.
pub fn extract_corpus(manifest: &Manifest, master_seed: u64) -> Vec<(String, Result<MetaFeatureVector>)> {
    manifest
        .entries
        .par_iter()
        .map(|e| {
            let r = load_csv(&manifest.resolve(e), &e.target).and_then(|ds| extract_all(&ds, extraction_seed(master_seed, &e.id)));
            (e.id.clone(), r)
        })
        .collect()
}

/// Label vectors of every manifest dataset (seed [`labeling_seed`]), in
/// manifest order; each dataset's failure is reported separately.
pub fn label_corpus(
    manifest: &Manifest,
    models: &[ModelId],
    threshold: f64,
    mode: ThresholdMode,
    master_seed: u64,
) -> Vec<(String, Result<LabelVector>)> {
    manifest
        .entries
        .par_iter()
        .map(|e| {
            let r = load_csv(&manifest.resolve(e), &e.target)
                .and_then(|ds| label_dataset(&ds, models, threshold, mode, labeling_seed(master_seed, &e.id)));
            (e.id.clone(), r)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modelzoo::default_grid;
    use crate::synthgen::{generate_corpus, Profile};

    #[test]
    fn build_is_resumable_and_records_failures() {
        let dir = tempfile::tempdir().unwrap();
        let mut manifest = generate_corpus(2, 3, Profile::Desk, dir.path()).unwrap();
        let mut broken = manifest.entries[0].clone();
        broken.id = "missing".into();
        broken.path = "nope.csv".into();
        manifest.entries.push(broken);
        let models = default_grid(2, 4).unwrap().models().unwrap();
        let out = dir.path().join("meta.csv");
        let first = build_meta_dataset(&manifest, &models, 0.01, ThresholdMode::Absolute, 5, Some(&out)).unwrap();
        assert_eq!(first.meta.len(), 2);
        assert_eq!(first.skipped.len(), 1);
        assert!(first.meta.instances.iter().all(|i| i.features.len() == 62 && i.labels.bits.len() == 24));
        let bytes = std::fs::read(&out).unwrap();
        let again = build_meta_dataset(&manifest, &models, 0.01, ThresholdMode::Absolute, 5, Some(&out)).unwrap();
        assert_eq!(again.reused, 2);
        assert_eq!(std::fs::read(&out).unwrap(), bytes);
        assert_eq!(MetaDataset::read_csv(&out).unwrap(), first.meta);
    }
}
