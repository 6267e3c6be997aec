//! Command-level behavior of the `metasel` binary: outputs, exit codes,
//! configuration files and job-count independence.

use std::path::Path;
use std::process::{Command, Output};

use metasel::metalearn::constructed_meta_dataset;
use metasel::modelzoo::MetaDataset;

fn metasel(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metasel"))
        .args(args)
        .current_dir(dir)
        .env_remove("METASEL_JOBS")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = metasel(dir, args);
    assert!(
        out.status.success(),
        "metasel {} failed: {}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_meta(dir: &Path, n: usize) -> MetaDataset {
    let md = constructed_meta_dataset(n, 1, 5);
    md.write_csv(&dir.join("meta.csv")).unwrap();
    md
}

#[test]
fn generate_zero_count_writes_empty_manifest() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["generate", "--count", "0", "--profile", "desk", "--out", "corpus"]);
    let text = std::fs::read_to_string(dir.path().join("corpus/manifest.csv")).unwrap();
    assert_eq!(text.lines().count(), 1, "header only: {text}");
    assert!(text.starts_with("id,path,target"));
}

#[test]
fn categorical_column_is_a_data_error_naming_the_column() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cat.csv"), "a,colour,class\n1,red,0\n2,blue,1\n3,red,0\n4,blue,1\n").unwrap();
    let out = metasel(dir.path(), &["extract", "--data", "cat.csv", "--out", "f.csv"]);
    assert_eq!(out.status.code(), Some(4));
    let err = stderr_of(&out);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("metasel: error[data]:") && err.contains("`colour`"), "{err}");
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = metasel(dir.path(), &["extract", "--data", "absent.csv", "--out", "f.csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_of(&out).lines().count(), 1);
}

#[test]
fn extract_is_repeatable_and_replaces_its_row() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--count", "2", "--profile", "desk", "--seed", "3", "--out", "c"]);
    ok(d, &["extract", "--data", "c/ds_00000.csv", "--seed", "9", "--out", "a.csv"]);
    ok(d, &["extract", "--data", "c/ds_00000.csv", "--seed", "9", "--out", "b.csv"]);
    let a = std::fs::read_to_string(d.join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read_to_string(d.join("b.csv")).unwrap());
    assert_eq!(a.lines().count(), 2);
    assert_eq!(a.lines().nth(1).unwrap().split(',').count(), 63);
    // appending another dataset, then re-extracting the first, keeps one row each
    ok(d, &["extract", "--data", "c/ds_00001.csv", "--seed", "9", "--out", "a.csv"]);
    ok(d, &["extract", "--data", "c/ds_00000.csv", "--seed", "9", "--out", "a.csv"]);
    let rows: Vec<String> = std::fs::read_to_string(d.join("a.csv")).unwrap().lines().skip(1).map(String::from).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.contains(&a.lines().nth(1).unwrap().to_string()));
}

#[test]
fn threshold_outside_open_interval_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["generate", "--count", "0", "--out", "c"]);
    for t in ["0.7", "0", "0.5", "-0.1"] {
        let out = metasel(dir.path(), &["label", "--manifest", "c/manifest.csv", "--threshold", t, "--out", "l.csv"]);
        assert_eq!(out.status.code(), Some(2), "threshold {t}");
        let err = stderr_of(&out);
        assert!(err.contains("threshold") && err.lines().count() == 1, "{err}");
    }
}

#[test]
fn train_report_recommend_and_importance() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_meta(d, 100);
    ok(d, &["grid", "--grid-profile", "desk", "--out", "grid.json"]);
    ok(
        d,
        &[
            "train", "--meta", "meta.csv", "--learner", "birel", "--folds", "5", "--seed", "2", "--report", "report.json",
            "--model", "m.msel", "--grid", "grid.json",
        ],
    );
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    let hr = report["hit_rate"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&hr));
    assert_eq!(report["per_fold"].as_array().unwrap().len(), 5);
    assert_eq!(report["fold_count"], 5);
    assert_eq!(report["n_instances"], 100);
    assert_eq!(report["final_params"]["kind"], "birel");

    ok(d, &["generate", "--count", "1", "--profile", "desk", "--seed", "1", "--out", "c"]);
    let out = ok(d, &["recommend", "--model", "m.msel", "--data", "c/ds_00000.csv", "--top", "3"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3, "{out}");
    let scores: Vec<f64> = lines.iter().map(|l| l.split('\t').nth(1).unwrap().parse().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]), "{scores:?}");
    assert!(lines.iter().enumerate().all(|(i, l)| l.starts_with(&format!("{}\t", i + 1))));

    let out = metasel(d, &["recommend", "--model", "m.msel", "--data", "c/ds_00000.csv", "--top", "0"]);
    assert_eq!(out.status.code(), Some(2));

    // a model trained on the 24-model desk grid refuses an 18-model grid
    let mut grid: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("grid.json")).unwrap()).unwrap();
    assert_eq!(grid["families"][0]["axes"][1]["name"], "max_features");
    grid["families"][0]["axes"][1]["values"] = serde_json::json!(["sqrt", "log2"]);
    std::fs::write(d.join("small.json"), grid.to_string()).unwrap();
    let out = metasel(d, &["recommend", "--model", "m.msel", "--data", "c/ds_00000.csv", "--grid", "small.json"]);
    assert_eq!(out.status.code(), Some(5), "{}", stderr_of(&out));

    ok(d, &["importance", "--model", "m.msel", "--meta", "meta.csv", "--repeats", "2", "--report", "imp.json"]);
    let imp: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("imp.json")).unwrap()).unwrap();
    assert_eq!(imp["features"].as_array().unwrap().len(), 62);
    assert_eq!(imp["ranking"][0], "n_features");
}

#[test]
fn config_file_supplies_flags_and_command_line_wins() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("run.conf"),
        "# pipeline settings\ncorpus_size = 2\nprofile = desk\nmaster_seed = 7\nthreshold = 0.02\nlearner = rakel\n",
    )
    .unwrap();
    ok(d, &["--config", "run.conf", "generate", "--out", "a"]);
    ok(d, &["--config", "run.conf", "generate", "--count", "1", "--out", "b"]);
    let rows = |p: &str| std::fs::read_to_string(d.join(p)).unwrap().lines().count() - 1;
    assert_eq!(rows("a/manifest.csv"), 2);
    assert_eq!(rows("b/manifest.csv"), 1);
    ok(d, &["generate", "--count", "2", "--profile", "desk", "--seed", "7", "--out", "c"]);
    assert_eq!(
        std::fs::read(d.join("a/ds_00001.csv")).unwrap(),
        std::fs::read(d.join("c/ds_00001.csv")).unwrap()
    );

    std::fs::write(d.join("bad.conf"), "no_such_option = 1\n").unwrap();
    let out = metasel(d, &["--config", "bad.conf", "generate", "--out", "x"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("no_such_option"));
}

#[test]
fn output_does_not_depend_on_job_count() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--count", "3", "--profile", "desk", "--seed", "11", "--out", "c"]);
    ok(d, &["--jobs", "1", "extract", "--manifest", "c/manifest.csv", "--seed", "4", "--out", "f1.csv"]);
    let out = Command::new(env!("CARGO_BIN_EXE_metasel"))
        .args(["extract", "--manifest", "c/manifest.csv", "--seed", "4", "--out", "f3.csv"])
        .current_dir(d)
        .env("METASEL_JOBS", "3")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert_eq!(std::fs::read(d.join("f1.csv")).unwrap(), std::fs::read(d.join("f3.csv")).unwrap());
}
