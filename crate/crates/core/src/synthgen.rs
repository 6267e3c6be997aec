//! Synthetic classification problems: Gaussian clusters on hypercube (or
//! random polytope) vertices with informative, redundant, repeated and noise
//! features plus label noise.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;
use crate::tabular::Dataset;

/// Target column name of generated CSV files.
pub const TARGET_COLUMN: &str = "class";

const SPEC_STREAM: u64 = 0x7370_6563;
const DATA_STREAM: u64 = 0x6461_7461;

/// Range profile for [`sample_spec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// n_samples in [500, 50000], h in [5, 20].
    Full,
    /// n_samples in [500, 2000] and at most 60 features.
    Desk,
}

impl Profile {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Profile::Full),
            "desk" => Ok(Profile::Desk),
            other => Err(Error::InvalidParameter(format!("unknown profile `{other}` (full|desk)"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Profile::Full => "full",
            Profile::Desk => "desk",
        }
    }

    fn max_samples(self) -> usize {
        match self {
            Profile::Full => 50_000,
            Profile::Desk => 2_000,
        }
    }

    fn max_h(self, classes: usize) -> usize {
        match self {
            Profile::Full => 20,
            Profile::Desk => 20.min(DESK_MAX_FEATURES / classes),
        }
    }
}

/// Feature cap of the desk profile.
pub const DESK_MAX_FEATURES: usize = 60;

/// Parameters of one synthetic problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub n_samples: usize,
    pub n_classes: usize,
    pub n_features: usize,
    pub n_informative: usize,
    pub n_redundant: usize,
    pub n_repeated: usize,
    pub n_clusters_per_class: usize,
    /// Class proportions, summing to 1.
    pub weights: Vec<f64>,
    pub flip_y: f64,
    pub hypercube: bool,
    pub class_sep: f64,
    pub seed: u64,
}

impl GenSpec {
    /// Structural feasibility (the sampling ranges are not enforced here so
    /// hand-built specs can step outside them).
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.n_classes < 2 {
            return bad(format!("n_classes {} < 2", self.n_classes));
        }
        if self.n_informative == 0 {
            return bad("n_informative must be positive".into());
        }
        if self.n_informative + self.n_redundant + self.n_repeated > self.n_features {
            return bad(format!(
                "informative {} + redundant {} + repeated {} exceed n_features {}",
                self.n_informative, self.n_redundant, self.n_repeated, self.n_features
            ));
        }
        if self.n_clusters_per_class == 0 || !clusters_fit(self.n_clusters_per_class * self.n_classes, self.n_informative) {
            return bad(format!(
                "{} clusters per class × {} classes exceed 2^{} hypercube vertices",
                self.n_clusters_per_class, self.n_classes, self.n_informative
            ));
        }
        if self.weights.len() != self.n_classes || self.weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return bad("weights must hold one positive value per class".into());
        }
        if !(0.0..1.0).contains(&self.flip_y) {
            return bad(format!("flip_y {} not in [0, 1)", self.flip_y));
        }
        if !(self.class_sep.is_finite() && self.class_sep > 0.0) {
            return bad(format!("class_sep {} must be positive", self.class_sep));
        }
        if self.n_samples < 2 * self.n_classes {
            return bad(format!("n_samples {} too small for {} classes", self.n_samples, self.n_classes));
        }
        Ok(())
    }
}

fn clusters_fit(clusters: usize, q: usize) -> bool {
    q >= usize::BITS as usize - 1 || clusters <= 1usize << q
}

/// Draws a [`GenSpec`] from the randomized recipe; deterministic in `seed`,
/// which also becomes the spec's data seed.
pub fn sample_spec(seed: u64, profile: Profile) -> GenSpec {
    let mut rng = seed::rng(seed::derive(seed, &[SPEC_STREAM]));
    let n_samples = rng.random_range(500..=profile.max_samples());
    let n_classes = rng.random_range(2..=10usize);
    let h = rng.random_range(5..=profile.max_h(n_classes));
    let n_features = h * n_classes;
    let frac = |rng: &mut seed::Rng| rng.random_range(0.2..=0.4f64);
    let n_informative = ((frac(&mut rng) * n_features as f64).floor() as usize).max(1);
    let n_redundant = (frac(&mut rng) * (n_features - n_informative) as f64).floor() as usize;
    let n_repeated = (frac(&mut rng) * (n_features - n_informative - n_redundant) as f64).floor() as usize;
    let n_clusters_per_class = loop {
        let k = rng.random_range(1..=5usize);
        if clusters_fit(k * n_classes, n_informative) {
            break k;
        }
    };
    let raw: Vec<f64> = (0..n_classes).map(|_| rng.random_range(0.4..=1.0f64)).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| w / total).collect();
    let flip_y = if rng.random_bool(0.5) { 0.01 } else { 0.05 };
    let hypercube = rng.random_bool(0.5);
    let class_sep = rng.random_range(1..=5u32) as f64;
    GenSpec {
        n_samples,
        n_classes,
        n_features,
        n_informative,
        n_redundant,
        n_repeated,
        n_clusters_per_class,
        weights,
        flip_y,
        hypercube,
        class_sep,
        seed,
    }
}

/// `count` distinct vertices of the `q`-dimensional {0,1} hypercube, drawn
/// uniformly without replacement.
fn distinct_vertices(q: usize, count: usize, rng: &mut seed::Rng) -> Vec<Vec<bool>> {
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v: Vec<bool> = (0..q).map(|_| rng.random_bool(0.5)).collect();
        if seen.insert(v.clone()) {
            out.push(v);
        }
    }
    out
}

/// Samples per class from the normalized weights (largest remainder), then
/// per cluster within each class (even split, remainder to the first
/// clusters).
fn cluster_sizes(spec: &GenSpec) -> Vec<usize> {
    let total: f64 = spec.weights.iter().sum();
    let exact: Vec<f64> = spec.weights.iter().map(|w| w / total * spec.n_samples as f64).collect();
    let mut per_class: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..spec.n_classes).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let short = spec.n_samples - per_class.iter().sum::<usize>();
    for &c in order.iter().take(short) {
        per_class[c] += 1;
    }
    let k = spec.n_clusters_per_class;
    let mut sizes = Vec::with_capacity(k * spec.n_classes);
    // cluster j belongs to class j % n_classes
    for j in 0..k * spec.n_classes {
        let class = j % spec.n_classes;
        let idx = j / spec.n_classes;
        let base = per_class[class] / k;
        sizes.push(base + usize::from(idx < per_class[class] % k));
    }
    sizes
}

/// Generates the dataset described by `spec`. All randomness comes from
/// `spec.seed`. Classes are renumbered in first-appearance order (class
/// names keep the generating class id) so that writing the dataset to CSV
/// and loading it back reproduces it exactly.
pub fn generate(spec: &GenSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = seed::rng(seed::derive(spec.seed, &[DATA_STREAM]));
    let (n, c, q) = (spec.n_samples, spec.n_classes, spec.n_informative);
    let n_clusters = c * spec.n_clusters_per_class;
    let sep = spec.class_sep;

    let centroids: Vec<Vec<f64>> = if spec.hypercube {
        distinct_vertices(q, n_clusters, &mut rng)
            .into_iter()
            .map(|v| v.into_iter().map(|b| if b { sep } else { -sep }).collect())
            .collect()
    } else {
        (0..n_clusters)
            .map(|_| (0..q).map(|_| rng.random_range(-sep..=sep)).collect())
            .collect()
    };

    let sizes = cluster_sizes(spec);
    let d = spec.n_features;
    let mut x = Matrix::zeros(n, d);
    let mut y = Vec::with_capacity(n);
    let mut row = 0;
    for (j, &size) in sizes.iter().enumerate() {
        for _ in 0..size {
            let r = x.row_mut(row);
            for (k, centre) in centroids[j].iter().enumerate() {
                let z: f64 = StandardNormal.sample(&mut rng);
                r[k] = centre + z;
            }
            y.push(j % c);
            row += 1;
        }
    }

    // redundant: random combinations of the informative columns
    let b: Vec<Vec<f64>> = (0..spec.n_redundant)
        .map(|_| (0..q).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect();
    for i in 0..n {
        let r = x.row_mut(i);
        for (k, coef) in b.iter().enumerate() {
            r[q + k] = coef.iter().zip(&r[..q]).map(|(a, v)| a * v).sum();
        }
    }
    // repeated: exact copies of informative or redundant columns
    let source_pool = q + spec.n_redundant;
    let sources: Vec<usize> = (0..spec.n_repeated).map(|_| rng.random_range(0..source_pool)).collect();
    let useless_start = source_pool + spec.n_repeated;
    for i in 0..n {
        let r = x.row_mut(i);
        for (k, &s) in sources.iter().enumerate() {
            r[source_pool + k] = r[s];
        }
        for v in &mut r[useless_start..] {
            *v = StandardNormal.sample(&mut rng);
        }
    }

    // label noise: exactly floor(flip_y * n) rows get a uniformly random
    // class; redrawn if a class would vanish
    let flips = (spec.flip_y * n as f64).floor() as usize;
    let y = loop {
        let mut noisy = y.clone();
        let mut rows: Vec<usize> = (0..n).collect();
        rows.partial_shuffle(&mut rng, flips);
        for &r in &rows[..flips] {
            noisy[r] = rng.random_range(0..c);
        }
        let mut present = vec![false; c];
        noisy.iter().for_each(|&v| present[v] = true);
        if present.iter().all(|&p| p) {
            break noisy;
        }
    };

    let mut row_order: Vec<usize> = (0..n).collect();
    row_order.shuffle(&mut rng);
    let mut col_order: Vec<usize> = (0..d).collect();
    col_order.shuffle(&mut rng);

    let mut out = Matrix::zeros(n, d);
    for (i, &src) in row_order.iter().enumerate() {
        let from = x.row(src);
        let to = out.row_mut(i);
        for (j, &cj) in col_order.iter().enumerate() {
            to[j] = from[cj];
        }
    }
    let mut relabel = vec![usize::MAX; c];
    let mut names = Vec::with_capacity(c);
    let target: Vec<usize> = row_order
        .iter()
        .map(|&src| {
            let orig = y[src];
            if relabel[orig] == usize::MAX {
                relabel[orig] = names.len();
                names.push(orig.to_string());
            }
            relabel[orig]
        })
        .collect();
    let feature_names = (0..d).map(|j| format!("f{j}")).collect();
    Dataset::with_class_names(out, target, feature_names, names)
}

/// One generated dataset in a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    /// Path of the dataset CSV, relative to the manifest's directory unless
    /// absolute.
    pub path: String,
    pub target: String,
    pub spec: Option<GenSpec>,
}

/// Listing of a corpus of datasets.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
    /// Directory that relative paths resolve against.
    pub base_dir: PathBuf,
}

const SPEC_COLUMNS: [&str; 12] = [
    "n_samples",
    "n_classes",
    "n_features",
    "n_informative",
    "n_redundant",
    "n_repeated",
    "n_clusters_per_class",
    "weights",
    "flip_y",
    "hypercube",
    "class_sep",
    "seed",
];

impl Manifest {
    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        let p = Path::new(&entry.path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Writes `id, path, target` and, for generated entries, the spec fields
    /// (weights joined by `;`).
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        let mut header = vec!["id", "path", "target"];
        header.extend(SPEC_COLUMNS);
        w.write_record(&header).map_err(|e| Error::csv(path, e))?;
        for e in &self.entries {
            let mut rec = vec![e.id.clone(), e.path.clone(), e.target.clone()];
            match &e.spec {
                Some(s) => rec.extend([
                    s.n_samples.to_string(),
                    s.n_classes.to_string(),
                    s.n_features.to_string(),
                    s.n_informative.to_string(),
                    s.n_redundant.to_string(),
                    s.n_repeated.to_string(),
                    s.n_clusters_per_class.to_string(),
                    s.weights.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";"),
                    s.flip_y.to_string(),
                    s.hypercube.to_string(),
                    s.class_sep.to_string(),
                    s.seed.to_string(),
                ]),
                None => rec.extend(std::iter::repeat_n(String::new(), SPEC_COLUMNS.len())),
            }
            w.write_record(&rec).map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads a manifest. Only `id` and `path` are required; `target`
    /// defaults to `class` and spec columns are optional, so a hand-written
    /// listing of real datasets works too.
    pub fn read(path: &Path) -> Result<Manifest> {
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let header: Vec<String> = r.headers().map_err(|e| Error::csv(path, e))?.iter().map(String::from).collect();
        let col = |name: &str| header.iter().position(|h| h == name);
        let (Some(id_col), Some(path_col)) = (col("id"), col("path")) else {
            return Err(Error::csv(path, "manifest needs `id` and `path` columns"));
        };
        let target_col = col("target");
        let spec_cols: Option<Vec<usize>> = SPEC_COLUMNS.iter().map(|c| col(c)).collect();
        let mut entries = Vec::new();
        let mut ids = HashSet::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::csv(path, e))?;
            let id = rec[id_col].to_string();
            if !ids.insert(id.clone()) {
                return Err(Error::csv(path, format!("duplicate dataset id `{id}`")));
            }
            let target = target_col
                .map(|c| rec[c].to_string())
                .filter(|t| !t.is_empty())
                .unwrap_or_else(|| TARGET_COLUMN.to_string());
            let spec = match &spec_cols {
                Some(cols) if !rec[cols[0]].is_empty() => Some(parse_spec(&rec, cols).map_err(|m| Error::csv(path, m))?),
                _ => None,
            };
            entries.push(ManifestEntry {
                id,
                path: rec[path_col].to_string(),
                target,
                spec,
            });
        }
        Ok(Manifest {
            entries,
            base_dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
        })
    }
}

fn parse_spec(rec: &csv::StringRecord, cols: &[usize]) -> std::result::Result<GenSpec, String> {
    fn p<T: std::str::FromStr>(s: &str, name: &str) -> std::result::Result<T, String> {
        s.parse().map_err(|_| format!("bad {name} `{s}`"))
    }
    let f = |i: usize| &rec[cols[i]];
    Ok(GenSpec {
        n_samples: p(f(0), SPEC_COLUMNS[0])?,
        n_classes: p(f(1), SPEC_COLUMNS[1])?,
        n_features: p(f(2), SPEC_COLUMNS[2])?,
        n_informative: p(f(3), SPEC_COLUMNS[3])?,
        n_redundant: p(f(4), SPEC_COLUMNS[4])?,
        n_repeated: p(f(5), SPEC_COLUMNS[5])?,
        n_clusters_per_class: p(f(6), SPEC_COLUMNS[6])?,
        weights: f(7).split(';').map(|w| p(w, "weight")).collect::<std::result::Result<_, _>>()?,
        flip_y: p(f(8), SPEC_COLUMNS[8])?,
        hypercube: p(f(9), SPEC_COLUMNS[9])?,
        class_sep: p(f(10), SPEC_COLUMNS[10])?,
        seed: p(f(11), SPEC_COLUMNS[11])?,
    })
}

/// File name of the manifest inside a corpus directory.
pub const MANIFEST_FILE: &str = "manifest.csv";

/// Generates `count` datasets with seeds `master_seed + index` into
/// `out_dir` (as `ds_<index>.csv`) and writes `manifest.csv` there.
pub fn generate_corpus(count: usize, master_seed: u64, profile: Profile, out_dir: &Path) -> Result<Manifest> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let entries = (0..count)
        .into_par_iter()
        .map(|i| {
            let spec = sample_spec(master_seed.wrapping_add(i as u64), profile);
            let ds = generate(&spec)?;
            let id = format!("ds_{i:05}");
            let file = format!("{id}.csv");
            ds.write_csv(&out_dir.join(&file), TARGET_COLUMN)?;
            Ok(ManifestEntry {
                id,
                path: file,
                target: TARGET_COLUMN.to_string(),
                spec: Some(spec),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        entries,
        base_dir: out_dir.to_path_buf(),
    };
    manifest.write(&out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}
