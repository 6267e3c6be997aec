//! Dataset representation, CSV ingestion, stratified splitting and folds.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;

/// Numeric feature matrix plus an encoded class target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    features: Matrix,
    target: Vec<usize>,
    feature_names: Vec<String>,
    class_count: usize,
    /// Original label for each class index (first-appearance order when
    /// loaded from CSV).
    class_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        features: Matrix,
        target: Vec<usize>,
        feature_names: Vec<String>,
        class_count: usize,
    ) -> Result<Self> {
        let class_names = (0..class_count).map(|c| c.to_string()).collect();
        Self::with_class_names(features, target, feature_names, class_names)
    }

    pub fn with_class_names(
        features: Matrix,
        target: Vec<usize>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let ds = Dataset {
            class_count: class_names.len(),
            features,
            target,
            feature_names,
            class_names,
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Builds a dataset from raw columns with default feature names `f0..`.
    pub fn from_columns(columns: &[Vec<f64>], target: Vec<usize>, class_count: usize) -> Result<Self> {
        let names = (0..columns.len()).map(|j| format!("f{j}")).collect();
        Self::new(Matrix::from_columns(columns), target, names, class_count)
    }

    fn validate(&self) -> Result<()> {
        let (n, d) = (self.features.rows(), self.features.cols());
        if n == 0 || d == 0 {
            return Err(Error::InvalidDataset(format!("shape {n}x{d}: need at least one row and one feature")));
        }
        if self.target.len() != n {
            return Err(Error::InvalidDataset(format!(
                "target length {} does not match {n} rows",
                self.target.len()
            )));
        }
        if self.feature_names.len() != d {
            return Err(Error::InvalidDataset("feature name count does not match columns".into()));
        }
        if self.class_count < 2 {
            return Err(Error::TooFewClasses);
        }
        if let Some(&bad) = self.target.iter().find(|&&t| t >= self.class_count) {
            return Err(Error::InvalidDataset(format!(
                "class index {bad} out of range for {} classes",
                self.class_count
            )));
        }
        if self.present_classes() < 2 {
            return Err(Error::TooFewClasses);
        }
        if self.features.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite feature value".into()));
        }
        Ok(())
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn target(&self) -> &[usize] {
        &self.target
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn n_rows(&self) -> usize {
        self.features.rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        class_counts(&self.target, self.class_count)
    }

    fn present_classes(&self) -> usize {
        self.class_counts().iter().filter(|&&c| c > 0).count()
    }

    /// Row subset keeping the class encoding. Not re-validated: callers only
    /// take subsets that keep at least one row.
    pub fn select(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(rows),
            target: rows.iter().map(|&i| self.target[i]).collect(),
            feature_names: self.feature_names.clone(),
            class_count: self.class_count,
            class_names: self.class_names.clone(),
        }
    }

    pub fn with_features(&self, features: Matrix) -> Dataset {
        assert_eq!(features.rows(), self.n_rows());
        let feature_names = if features.cols() == self.n_features() {
            self.feature_names.clone()
        } else {
            (0..features.cols()).map(|j| format!("f{j}")).collect()
        };
        Dataset {
            features,
            target: self.target.clone(),
            feature_names,
            class_count: self.class_count,
            class_names: self.class_names.clone(),
        }
    }

    /// Writes the CSV dialect read by [`load_csv`]: header row, features in
    /// shortest round-trip decimal form, the class label in the last column.
    pub fn write_csv(&self, path: &Path, target_column: &str) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push(target_column);
        w.write_record(&header).map_err(|e| Error::csv(path, e))?;
        let mut record = Vec::with_capacity(header.len());
        for i in 0..self.n_rows() {
            record.clear();
            record.extend(self.features.row(i).iter().map(|v| v.to_string()));
            record.push(self.class_names[self.target[i]].clone());
            w.write_record(&record).map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

pub fn class_counts(target: &[usize], class_count: usize) -> Vec<usize> {
    let mut counts = vec![0; class_count];
    for &t in target {
        counts[t] += 1;
    }
    counts
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Reads a headered CSV with numeric feature columns. Empty cells are
/// imputed with the column median and the target is label-encoded in
/// first-appearance order.
pub fn load_csv(path: &Path, target_column: &str) -> Result<Dataset> {
    if !path.exists() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
        ));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::csv(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    let target_idx = headers
        .iter()
        .position(|h| h == target_column)
        .ok_or_else(|| Error::MissingTarget(target_column.to_owned()))?;
    let feature_idx: Vec<usize> = (0..headers.len()).filter(|&j| j != target_idx).collect();
    let d = feature_idx.len();

    let mut columns: Vec<Vec<Option<f64>>> = vec![Vec::new(); d];
    let mut labels: Vec<usize> = Vec::new();
    let mut class_names: Vec<String> = Vec::new();
    let mut encoding: HashMap<String, usize> = HashMap::new();

    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let line = r + 2;
        let label = record.get(target_idx).unwrap_or("").trim();
        if label.is_empty() {
            return Err(Error::InvalidDataset(format!("missing target value on line {line}")));
        }
        let next = class_names.len();
        let code = *encoding.entry(label.to_owned()).or_insert_with(|| {
            class_names.push(label.to_owned());
            next
        });
        labels.push(code);
        for (c, &j) in feature_idx.iter().enumerate() {
            let cell = record.get(j).unwrap_or("").trim();
            if cell.is_empty() {
                columns[c].push(None);
                continue;
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => columns[c].push(Some(v)),
                Ok(_) => columns[c].push(None),
                Err(_) => {
                    return Err(Error::NonNumericColumn {
                        column: headers[j].clone(),
                        value: cell.to_owned(),
                        line,
                    })
                }
            }
        }
    }

    if class_names.len() < 2 {
        return Err(Error::TooFewClasses);
    }
    let imputed: Vec<Vec<f64>> = columns
        .into_iter()
        .map(|col| {
            let mut present: Vec<f64> = col.iter().flatten().copied().collect();
            let fill = median(&mut present);
            col.into_iter().map(|v| v.unwrap_or(fill)).collect()
        })
        .collect();
    let names = feature_idx.iter().map(|&j| headers[j].clone()).collect();
    let features = if labels.is_empty() {
        Matrix::zeros(0, d)
    } else {
        Matrix::from_columns(&imputed)
    };
    Dataset::with_class_names(features, labels, names, class_names)
}

/// Stratified train/validation partition.
#[derive(Debug, Clone)]
pub struct SplitPair {
    pub train: Dataset,
    pub validation: Dataset,
    pub train_rows: Vec<usize>,
    pub validation_rows: Vec<usize>,
    pub seed: u64,
}

/// Stratified split; the validation size is `round(fraction * n)` distributed
/// across classes by largest remainder, with every class keeping at least one
/// row on each side.
pub fn split(ds: &Dataset, validation_fraction: f64, seed: u64) -> Result<SplitPair> {
    if !(validation_fraction > 0.0 && validation_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "validation fraction {validation_fraction} not in (0, 1)"
        )));
    }
    let counts = ds.class_counts();
    for (class, &count) in counts.iter().enumerate() {
        if count == 1 {
            return Err(Error::ClassTooSmall {
                class,
                count,
                required: 2,
            });
        }
    }
    let n = ds.n_rows();
    let target_total = (validation_fraction * n as f64).round() as usize;

    let exact: Vec<f64> = counts.iter().map(|&c| validation_fraction * c as f64).collect();
    let mut alloc: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..counts.len()).filter(|&c| counts[c] > 0).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut assigned: usize = alloc.iter().sum();
    for &c in order.iter().cycle().take(order.len() * 2) {
        if assigned >= target_total {
            break;
        }
        if alloc[c] + 1 < counts[c] {
            alloc[c] += 1;
            assigned += 1;
        }
    }
    for c in 0..counts.len() {
        if counts[c] > 0 {
            alloc[c] = alloc[c].clamp(1, counts[c] - 1);
        }
    }

    let mut rng = seed::rng(seed);
    let mut is_val = vec![false; n];
    for (class, per_class) in rows_by_class(ds.target(), ds.class_count()).into_iter().enumerate() {
        let mut rows = per_class;
        rows.shuffle(&mut rng);
        for &r in rows.iter().take(alloc[class]) {
            is_val[r] = true;
        }
    }
    let validation_rows: Vec<usize> = (0..n).filter(|&i| is_val[i]).collect();
    let train_rows: Vec<usize> = (0..n).filter(|&i| !is_val[i]).collect();
    Ok(SplitPair {
        train: ds.select(&train_rows),
        validation: ds.select(&validation_rows),
        train_rows,
        validation_rows,
        seed,
    })
}

pub(crate) fn rows_by_class(target: &[usize], class_count: usize) -> Vec<Vec<usize>> {
    let mut by_class = vec![Vec::new(); class_count];
    for (i, &t) in target.iter().enumerate() {
        by_class[t].push(i);
    }
    by_class
}

/// Assignment of every row to one of `k` folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub fold_assignments: Vec<usize>,
    pub k: usize,
    pub seed: u64,
}

impl FoldPlan {
    /// (training rows, held-out rows) for one fold.
    pub fn fold_rows(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, &f) in self.fold_assignments.iter().enumerate() {
            if f == fold {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        (train, test)
    }
}

/// Stratified k-fold plan: each class is shuffled and dealt round-robin,
/// continuing from where the previous class stopped so fold sizes stay
/// balanced overall.
pub fn stratified_folds(ds: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    stratified_folds_for(ds.target(), ds.class_count(), k, seed)
}

pub(crate) fn stratified_folds_for(target: &[usize], class_count: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("fold count {k} < 2")));
    }
    let by_class = rows_by_class(target, class_count);
    for (class, rows) in by_class.iter().enumerate() {
        if !rows.is_empty() && rows.len() < k {
            return Err(Error::ClassTooSmall {
                class,
                count: rows.len(),
                required: k,
            });
        }
    }
    let mut rng = seed::rng(seed);
    let mut assignment = vec![0; target.len()];
    let mut next = 0;
    for mut rows in by_class {
        rows.shuffle(&mut rng);
        for r in rows {
            assignment[r] = next;
            next = (next + 1) % k;
        }
    }
    Ok(FoldPlan {
        fold_assignments: assignment,
        k,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn balanced(n: usize, classes: usize) -> Dataset {
        let col: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let target = (0..n).map(|i| i % classes).collect();
        Dataset::from_columns(&[col], target, classes).unwrap()
    }

    #[test]
    fn load_encodes_first_appearance() {
        let f = write_tmp("x1,x2,y\n1,2,a\n3,4,b\n5,6,a\n");
        let ds = load_csv(f.path(), "y").unwrap();
        assert_eq!((ds.n_rows(), ds.n_features(), ds.class_count()), (3, 2, 2));
        assert_eq!(ds.target(), &[0, 1, 0]);
        assert_eq!(ds.class_names(), &["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn load_imputes_median() {
        let f = write_tmp("x,y\n1.0,a\n,b\n3.0,a\n");
        let ds = load_csv(f.path(), "y").unwrap();
        assert_eq!(ds.features().column(0), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn load_rejects_single_class() {
        let f = write_tmp("x,y\n1,a\n2,a\n");
        assert!(matches!(load_csv(f.path(), "y"), Err(Error::TooFewClasses)));
    }

    #[test]
    fn load_error_paths() {
        let f = write_tmp("x,colour,y\n1,red,a\n2,blue,b\n");
        match load_csv(f.path(), "y") {
            Err(Error::NonNumericColumn { column, .. }) => assert_eq!(column, "colour"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(load_csv(f.path(), "label"), Err(Error::MissingTarget(_))));
        assert!(matches!(
            load_csv(Path::new("/definitely/not/here.csv"), "y"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn split_balanced_binary() {
        let ds = balanced(100, 2);
        let sp = split(&ds, 0.2, 7).unwrap();
        assert_eq!(sp.train.n_rows(), 80);
        assert_eq!(sp.validation.n_rows(), 20);
        assert_eq!(sp.validation.class_counts(), vec![10, 10]);
        assert_eq!(sp.train.class_counts(), vec![40, 40]);
        let again = split(&ds, 0.2, 7).unwrap();
        assert_eq!(sp.validation_rows, again.validation_rows);
    }

    #[test]
    fn split_rejects_singleton_class() {
        let col: Vec<f64> = (0..10).map(f64::from).collect();
        let mut target = vec![0; 10];
        target[3] = 1;
        let ds = Dataset::from_columns(&[col], target, 2).unwrap();
        assert!(matches!(split(&ds, 0.2, 1), Err(Error::ClassTooSmall { .. })));
    }

    #[test]
    fn folds_one_instance_per_class() {
        let ds = balanced(10, 2);
        let plan = stratified_folds(&ds, 5, 3).unwrap();
        for f in 0..5 {
            let (_, test) = plan.fold_rows(f);
            let mut classes: Vec<usize> = test.iter().map(|&i| ds.target()[i]).collect();
            classes.sort();
            assert_eq!(classes, vec![0, 1]);
        }
        assert_eq!(plan, stratified_folds(&ds, 5, 3).unwrap());
    }

    #[test]
    fn folds_reject_small_class() {
        let col: Vec<f64> = (0..13).map(f64::from).collect();
        let target = (0..13).map(|i| usize::from(i >= 10)).collect();
        let ds = Dataset::from_columns(&[col], target, 2).unwrap();
        assert!(matches!(stratified_folds(&ds, 5, 0), Err(Error::ClassTooSmall { class: 1, .. })));
    }
}
