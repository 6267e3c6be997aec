//! Subcommands. Each reads its inputs from files, delegates to the library
//! and writes plain CSV/JSON outputs plus a short summary on stdout.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand};
use serde::Serialize;

use metasel::metafeatures::{read_meta_features_csv, write_meta_features_csv};
use metasel::metalearn::{
    cross_validate_meta, load_model, permutation_importance, recommend, save_model, train_meta_learner, EvalReport,
    LearnerConfig, LearnerKind, LearnerParams,
};
use metasel::modelzoo::meta::{extraction_seed, read_labels_csv, write_labels_csv};
use metasel::modelzoo::{
    build_meta_dataset, default_grid, extract_corpus, label_corpus, Grid, MetaDataset, ThresholdMode, DEFAULT_THRESHOLD,
    DESK_ESTIMATORS, FULL_ESTIMATORS,
};
use metasel::seed;
use metasel::synthgen::{generate_corpus, Manifest, Profile, MANIFEST_FILE, TARGET_COLUMN};
use metasel::weak_learners::tree::{Criterion, MaxFeatures};
use metasel::{extract_all, load_csv, MetaFeatureVector};

/// An invalid flag combination or value detected after parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn threshold(s: &str) -> std::result::Result<f64, String> {
    let t: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if t > 0.0 && t < 0.5 {
        Ok(t)
    } else {
        Err(format!("threshold must lie in (0, 0.5), got {t}"))
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic corpus of classification datasets and its manifest.
    Generate(GenerateArgs),
    /// Extract the 62 meta-features of one dataset or of a whole manifest.
    Extract(ExtractArgs),
    /// Label manifest datasets by grid-searching the candidate models.
    Label(LabelArgs),
    /// Build a meta-dataset (meta-features + labels), from a manifest or by
    /// joining extract and label outputs.
    Build(BuildArgs),
    /// Cross-validate a meta-learner and fit the final model.
    Train(TrainArgs),
    /// Rank the grid's models for a new dataset.
    Recommend(RecommendArgs),
    /// Permutation importance of the meta-features for a fitted meta-learner.
    Importance(ImportanceArgs),
    /// Write the candidate model grid as JSON.
    Grid(GridCmdArgs),
}

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Generate(a) => generate(a),
        Command::Extract(a) => extract(a),
        Command::Label(a) => label(a),
        Command::Build(a) => build(a),
        Command::Train(a) => train(a),
        Command::Recommend(a) => recommend_cmd(a),
        Command::Importance(a) => importance(a),
        Command::Grid(a) => grid_cmd(a),
    }
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// Number of datasets.
    #[arg(long)]
    count: usize,
    /// Master seed; dataset i uses seed + i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Parameter ranges: full, or desk (at most 2000 rows and 60 features).
    #[arg(long, default_value = "full")]
    profile: String,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn generate(a: GenerateArgs) -> Result<()> {
    let profile = Profile::parse(&a.profile)?;
    let manifest = generate_corpus(a.count, a.seed, profile, &a.out)?;
    println!(
        "generated {} {} datasets in {} (manifest {})",
        manifest.entries.len(),
        profile.name(),
        a.out.display(),
        a.out.join(MANIFEST_FILE).display()
    );
    Ok(())
}

/// Where the model grid comes from: a JSON file or a named estimator profile.
#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    /// Grid JSON file (overrides --grid-profile and --estimators).
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Estimator counts of the built-in grid: full (500/1000) or desk (50/100).
    #[arg(long, default_value = "full")]
    grid_profile: String,
    /// Custom estimator counts `E1,E2` for the built-in grid.
    #[arg(long)]
    estimators: Option<String>,
}

impl GridArgs {
    fn resolve(&self) -> Result<Grid> {
        if let Some(path) = &self.grid {
            return Ok(Grid::read(path)?);
        }
        let (e1, e2) = match &self.estimators {
            Some(s) => {
                let parts: Vec<&str> = s.split(',').map(str::trim).collect();
                let [a, b] = parts.as_slice() else {
                    return Err(usage(format!("--estimators expects E1,E2, got `{s}`")));
                };
                let p = |v: &str| v.parse::<usize>().map_err(|_| usage(format!("bad estimator count `{v}`")));
                (p(a)?, p(b)?)
            }
            None => match self.grid_profile.as_str() {
                "full" => FULL_ESTIMATORS,
                "desk" => DESK_ESTIMATORS,
                other => return Err(usage(format!("unknown grid profile `{other}` (full|desk)"))),
            },
        };
        Ok(default_grid(e1, e2)?)
    }
}

/// Grid file written next to a labels or meta-dataset file.
fn grid_sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".grid.json");
    PathBuf::from(s)
}

#[derive(Args, Debug)]
pub struct ExtractArgs {
    /// One dataset CSV.
    #[arg(long, conflicts_with = "manifest", required_unless_present = "manifest")]
    data: Option<PathBuf>,
    /// Target column of --data.
    #[arg(long, default_value = TARGET_COLUMN)]
    target: String,
    /// Dataset id of --data (default: file stem).
    #[arg(long)]
    id: Option<String>,
    /// Corpus manifest: extract every listed dataset.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Master seed; each dataset's extraction seed is derived from it and
    /// the dataset id.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV (for --data, the row is added to or replaced in an
    /// existing file).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn dataset_id(path: &Path, id: Option<&str>) -> Result<String> {
    match id {
        Some(id) => Ok(id.to_string()),
        None => path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .ok_or_else(|| usage(format!("cannot derive a dataset id from {}", path.display()))),
    }
}

fn extract(a: ExtractArgs) -> Result<()> {
    if let Some(mpath) = &a.manifest {
        let out = a.out.as_ref().ok_or_else(|| usage("--manifest extraction needs --out"))?;
        let manifest = Manifest::read(mpath)?;
        let mut rows = Vec::new();
        let mut failed = 0;
        for (id, r) in extract_corpus(&manifest, a.seed) {
            match r {
                Ok(mf) => rows.push((id, mf)),
                Err(e) => {
                    log::warn!("skipping dataset {id}: {e}");
                    failed += 1;
                }
            }
        }
        if rows.is_empty() && failed > 0 {
            bail!("meta-feature extraction failed for all {failed} datasets");
        }
        write_meta_features_csv(out, &rows)?;
        println!("extracted meta-features of {} datasets ({failed} skipped) -> {}", rows.len(), out.display());
        return Ok(());
    }
    let data = a.data.as_ref().expect("clap requires --data or --manifest");
    let id = dataset_id(data, a.id.as_deref())?;
    let ds = load_csv(data, &a.target)?;
    let mf = extract_all(&ds, extraction_seed(a.seed, &id))?;
    match &a.out {
        Some(out) => {
            let mut rows: Vec<(String, MetaFeatureVector)> =
                if out.exists() { read_meta_features_csv(out)? } else { Vec::new() };
            match rows.iter_mut().find(|(r, _)| *r == id) {
                Some(row) => row.1 = mf,
                None => rows.push((id.clone(), mf)),
            }
            write_meta_features_csv(out, &rows)?;
            println!("extracted 62 meta-features of {id} -> {}", out.display());
        }
        None => {
            for (name, v) in MetaFeatureVector::names().iter().zip(mf.values()) {
                println!("{name}\t{v}");
            }
        }
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct LabelingArgs {
    /// Accuracy gap to the best model within which a model is positive.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD, value_parser = threshold, allow_hyphen_values = true)]
    threshold: f64,
    /// Read the threshold as a fraction of the best accuracy instead of an
    /// absolute gap.
    #[arg(long)]
    relative: bool,
}

impl LabelingArgs {
    fn mode(&self) -> ThresholdMode {
        if self.relative {
            ThresholdMode::Relative
        } else {
            ThresholdMode::Absolute
        }
    }
}

#[derive(Args, Debug)]
pub struct LabelArgs {
    /// Corpus manifest.
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    labeling: LabelingArgs,
    /// Master seed; each dataset's labeling seed is derived from it and the
    /// dataset id.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV of label vectors (the grid is written alongside as
    /// `<out>.grid.json`).
    #[arg(long)]
    out: PathBuf,
}

fn label(a: LabelArgs) -> Result<()> {
    let grid = a.grid.resolve()?;
    let models = grid.models()?;
    let manifest = Manifest::read(&a.manifest)?;
    let mut rows = Vec::new();
    let mut failed = 0;
    for (id, r) in label_corpus(&manifest, &models, a.labeling.threshold, a.labeling.mode(), a.seed) {
        match r {
            Ok(l) => rows.push((id, l)),
            Err(e) => {
                log::warn!("skipping dataset {id}: {e}");
                failed += 1;
            }
        }
    }
    if rows.is_empty() && failed > 0 {
        bail!("labeling failed for all {failed} datasets");
    }
    let names: Vec<String> = models.iter().map(|m| m.name()).collect();
    write_labels_csv(&a.out, &names, &rows)?;
    grid.write(&grid_sidecar(&a.out))?;
    let mean_pos = rows.iter().map(|(_, l)| l.positives() as f64).sum::<f64>() / rows.len().max(1) as f64;
    println!(
        "labeled {} datasets over {} models ({failed} skipped, {mean_pos:.2} positives on average) -> {}",
        rows.len(),
        models.len(),
        a.out.display()
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    /// Corpus manifest: extract and label every dataset (resumable).
    #[arg(long, conflicts_with_all = ["features", "labels"], required_unless_present_all = ["features", "labels"])]
    manifest: Option<PathBuf>,
    /// Meta-feature CSV from `extract`, joined with --labels.
    #[arg(long, requires = "labels")]
    features: Option<PathBuf>,
    /// Label CSV from `label`, joined with --features.
    #[arg(long, requires = "features")]
    labels: Option<PathBuf>,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    labeling: LabelingArgs,
    /// Master seed (manifest mode).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output meta-dataset CSV (the grid is written alongside as
    /// `<out>.grid.json`).
    #[arg(long)]
    out: PathBuf,
}

fn build(a: BuildArgs) -> Result<()> {
    let (meta, grid) = if let Some(mpath) = &a.manifest {
        let grid = a.grid.resolve()?;
        let models = grid.models()?;
        let manifest = Manifest::read(mpath)?;
        let summary =
            build_meta_dataset(&manifest, &models, a.labeling.threshold, a.labeling.mode(), a.seed, Some(&a.out))?;
        for (id, err) in &summary.skipped {
            log::warn!("dataset {id} skipped: {err}");
        }
        if summary.meta.is_empty() && !summary.skipped.is_empty() {
            bail!("no dataset could be processed ({} failures)", summary.skipped.len());
        }
        println!(
            "built meta-dataset of {} instances ({} reused, {} skipped)",
            summary.meta.len(),
            summary.reused,
            summary.skipped.len()
        );
        (summary.meta, Some(grid))
    } else {
        let (fpath, lpath) = (a.features.as_ref().unwrap(), a.labels.as_ref().unwrap());
        let features = read_meta_features_csv(fpath)?;
        let (names, labels) = read_labels_csv(lpath)?;
        let sidecar = grid_sidecar(lpath);
        let grid = if a.grid.grid.is_some() {
            Some(a.grid.resolve()?)
        } else if sidecar.exists() {
            Some(Grid::read(&sidecar)?)
        } else {
            None
        };
        if let Some(g) = &grid {
            let gnames: Vec<String> = g.models()?.iter().map(|m| m.name()).collect();
            if gnames != names {
                return Err(metasel::Error::SchemaMismatch(format!(
                    "labels have {} models, the grid has {}",
                    names.len(),
                    gnames.len()
                ))
                .into());
            }
        }
        let meta = MetaDataset::join(&features, &labels, names)?;
        let dropped = features.len().max(labels.len()) - meta.len();
        meta.write_csv(&a.out)?;
        println!("joined meta-dataset of {} instances ({dropped} unmatched ids dropped)", meta.len());
        (meta, grid)
    };
    match grid {
        Some(g) => g.write(&grid_sidecar(&a.out))?,
        None => log::warn!("no grid known for {}; recommendations will carry model names only", a.out.display()),
    }
    println!("meta-dataset ({} features, {} labels) -> {}", meta.n_features(), meta.n_labels(), a.out.display());
    Ok(())
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Meta-dataset CSV.
    #[arg(long)]
    meta: PathBuf,
    /// Meta-learner: mlknn, birel or rakel.
    #[arg(long, default_value = "mlknn")]
    learner: String,
    /// Outer cross-validation folds.
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Evaluation report (JSON).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Fitted meta-learner file.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Grid JSON to embed in the model (default: `<meta>.grid.json` if present).
    #[arg(long)]
    grid: Option<PathBuf>,
    /// MLkNN neighbor counts searched.
    #[arg(long, value_delimiter = ',', default_values_t = [3usize, 5, 7, 10])]
    k_values: Vec<usize>,
    /// Split criteria searched by the tree-based learners.
    #[arg(long, value_delimiter = ',', default_values = ["gini", "entropy"])]
    criteria: Vec<String>,
    /// Feature subsampling rules searched by the tree-based learners.
    #[arg(long, value_delimiter = ',', default_values = ["sqrt", "log2"])]
    max_features: Vec<String>,
    /// RAkEL label subset size.
    #[arg(long, default_value_t = 3)]
    subset_size: usize,
    /// RAkEL member count (default ⌈2p / subset size⌉).
    #[arg(long)]
    model_count: Option<usize>,
}

/// Cross-validation results plus the hyperparameters of the saved model.
#[derive(Serialize)]
struct TrainReport {
    #[serde(flatten)]
    evaluation: EvalReport,
    final_params: LearnerParams,
}

fn train(a: TrainArgs) -> Result<()> {
    let kind = LearnerKind::parse(&a.learner)?;
    let criteria = a.criteria.iter().map(|c| Criterion::parse(c)).collect::<metasel::Result<Vec<_>>>()?;
    let features = a.max_features.iter().map(|m| MaxFeatures::parse(m)).collect::<metasel::Result<Vec<_>>>()?;
    let config = LearnerConfig::new(kind, &a.k_values, &criteria, &features, a.subset_size, a.model_count)?;
    let md = MetaDataset::read_csv(&a.meta)?;
    let grid_path = a.grid.clone().or_else(|| Some(grid_sidecar(&a.meta)).filter(|p| p.exists()));
    let grid = grid_path.map(|p| Grid::read(&p)).transpose()?;
    let eval = cross_validate_meta(&md, &config, a.folds, a.seed)?;
    let mut model = train_meta_learner(&md, &config, seed::derive(a.seed, &[1]))?;
    if let Some(g) = grid {
        model = model.with_grid(g).context("attaching the model grid")?;
    }
    println!(
        "{} {}-fold on {} meta-instances: hit rate {:.3} (random pick {:.3}), hamming {:.3}, macro P/R/S/F1 {:.3}/{:.3}/{:.3}/{:.3}",
        kind.name(),
        eval.fold_count,
        eval.n_instances,
        eval.hit_rate,
        eval.baseline_hit_rate,
        eval.hamming_loss,
        eval.macro_precision,
        eval.macro_recall,
        eval.macro_specificity,
        eval.macro_f1
    );
    println!("final model: {}", model.params);
    let report = TrainReport {
        evaluation: eval,
        final_params: model.params,
    };
    if let Some(path) = &a.report {
        write_json(path, &report)?;
        println!("report -> {}", path.display());
    }
    if let Some(path) = &a.model {
        save_model(&model, path)?;
        println!("model -> {}", path.display());
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| metasel::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

#[derive(Args, Debug)]
pub struct RecommendArgs {
    /// Fitted meta-learner file.
    #[arg(long)]
    model: PathBuf,
    /// Dataset CSV to recommend for.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = TARGET_COLUMN)]
    target: String,
    /// Number of models listed (default: all).
    #[arg(long)]
    top: Option<usize>,
    /// Master seed for meta-feature extraction (as in `extract`).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dataset id (default: file stem).
    #[arg(long)]
    id: Option<String>,
    /// Current grid; the model's labels must match it.
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Also write the full ranking as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

fn recommend_cmd(a: RecommendArgs) -> Result<()> {
    if a.top == Some(0) {
        return Err(usage("--top must be at least 1"));
    }
    let mut model = load_model(&a.model)?;
    if let Some(path) = &a.grid {
        let grid = Grid::read(path)?;
        model.check_grid(&grid)?;
        model.grid = Some(grid);
    }
    let id = dataset_id(&a.data, a.id.as_deref())?;
    let ds = load_csv(&a.data, &a.target)?;
    let ranking = recommend(&model, &ds, extraction_seed(a.seed, &id))?;
    let top = a.top.unwrap_or(ranking.len());
    if top > ranking.len() {
        log::warn!("--top {top} exceeds the {} models of the grid", ranking.len());
    }
    for r in ranking.iter().take(top) {
        let desc = r.model.as_ref().map(|m| m.to_string()).unwrap_or_else(|| r.name.clone());
        println!("{}\t{:.6}\t{desc}", r.rank, r.score);
    }
    if let Some(path) = &a.json {
        write_json(path, &ranking)?;
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct ImportanceArgs {
    /// Fitted meta-learner file.
    #[arg(long)]
    model: PathBuf,
    /// Meta-dataset CSV to permute.
    #[arg(long)]
    meta: PathBuf,
    /// Shuffles per feature.
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Importance report (JSON).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Features listed in the summary.
    #[arg(long, default_value_t = 10)]
    show: usize,
}

fn importance(a: ImportanceArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let md = MetaDataset::read_csv(&a.meta)?;
    let rep = permutation_importance(&model, &md, a.repeats, a.seed)?;
    println!("baseline hit rate {:.3} on {} meta-instances; top features:", rep.baseline_hit_rate, rep.n_instances);
    for name in rep.ranking.iter().take(a.show) {
        let f = rep.features.iter().find(|f| &f.name == name).expect("ranked feature exists");
        println!("{name}\t{:.4} ± {:.4}", f.mean_drop, f.std_drop);
    }
    if let Some(path) = &a.report {
        write_json(path, &rep)?;
        println!("report -> {}", path.display());
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct GridCmdArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// Output JSON file.
    #[arg(long)]
    out: PathBuf,
}

fn grid_cmd(a: GridCmdArgs) -> Result<()> {
    let grid = a.grid.resolve()?;
    grid.write(&a.out)?;
    println!("grid of {} models ({}) -> {}", grid.models()?.len(), grid.profile, a.out.display());
    Ok(())
}
