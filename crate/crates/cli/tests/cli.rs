use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hwpd_core::classify::ModelFile;

fn hwpd(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hwpd")).args(args).current_dir(cwd).env("HWPD_LOG", "warn").output().unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "exit {:?}\n{}", out.status.code(), String::from_utf8_lossy(&out.stderr));
}

/// Small three-task cohort with extracted features under `dir`.
fn prepare(dir: &Path) {
    fs::write(dir.join("cohort.json"), r#"{"tasks": ["Circle", "Spiral", "Rey"]}"#).unwrap();
    ok(&hwpd(&["synth", "--config", "cohort.json", "--seed", "7", "--counts", "4,4,4", "--out", "data"], dir));
    ok(&hwpd(&["features", "--manifest", "data/manifest.csv", "--out", "feats"], dir));
}

#[test]
fn pipeline_runs_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    prepare(dir);
    let entries = fs::read_to_string(dir.join("data/manifest.csv")).unwrap();
    assert_eq!(entries.lines().count(), 1 + 12 * 3);
    ok(&hwpd(&["--threads", "1", "features", "--manifest", "data/manifest.csv", "--out", "feats1"], dir));
    assert_eq!(fs::read(dir.join("feats/features.csv")).unwrap(), fs::read(dir.join("feats1/features.csv")).unwrap());

    let eval = ["evaluate", "--matrix", "feats/features.csv", "--experiment", "ehc-vs-pd", "--features", "all,neuromotor", "--seed", "3"];
    ok(&hwpd(&[&eval[..], &["--out", "rep"]].concat(), dir));
    ok(&hwpd(&[&eval[..], &["--out", "rep2", "--threads", "1"]].concat(), dir));
    for f in ["report.json", "table.csv", "scores_all.csv", "roc_all.csv", "roc_neuromotor.csv", "provenance.json"] {
        assert_eq!(fs::read(dir.join("rep").join(f)).unwrap(), fs::read(dir.join("rep2").join(f)).unwrap(), "{f}");
    }
    let table = fs::read_to_string(dir.join("rep/table.csv")).unwrap();
    assert_eq!(table.lines().next().unwrap(), "task,role,neuromotor,all");
    assert!(table.contains("Circle,training,"));
    assert!(table.contains("Rey,test,,"));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("rep/report.json")).unwrap()).unwrap();
    assert_eq!(report["audit"]["training_leaks"], 0);
    assert_eq!(report["report"]["protocol"]["optimization_task"], "Circle");
    assert!(report["provenance"]["config_hash"].as_str().unwrap().len() == 64);
    assert!(fs::read_to_string(dir.join("rep/run.log")).unwrap().contains("finished"));
    let roc = fs::read_to_string(dir.join("rep/roc_all.csv")).unwrap();
    assert!(roc.starts_with("threshold,fpr,tpr\ninf,0,0\n"));
}

#[test]
fn evaluate_from_manifest_train_fuse_and_roc() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    prepare(dir);
    ok(&hwpd(
        &[
            "evaluate",
            "--manifest",
            "data/manifest.csv",
            "--experiment",
            "yhc-vs-pd",
            "--features",
            "kinematic",
            "--classifier",
            "knn",
            "--seed",
            "1",
            "--out",
            "rep",
        ],
        dir,
    ));

    fs::write(dir.join("grid.json"), r#"{"c": [1.0, 10.0], "gamma": [0.01]}"#).unwrap();
    ok(&hwpd(&["train", "--matrix", "feats/features.csv", "--grid", "grid.json", "--seed", "5", "--out", "model"], dir));
    let model = ModelFile::from_json(&fs::read_to_string(dir.join("model/model.json")).unwrap()).unwrap();
    assert_eq!(model.seed, 5);
    assert_eq!(fs::read_to_string(dir.join("model/grid.csv")).unwrap().lines().count(), 3);

    ok(&hwpd(&["fuse", "--scores", "rep/scores_kinematic.csv", "--out", "fused"], dir));
    let fused: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("fused/fused.json")).unwrap()).unwrap();
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("rep/report.json")).unwrap()).unwrap();
    assert_eq!(fused["accuracy"], report["report"]["families"][0]["fused"]["accuracy"]);

    ok(&hwpd(&["roc", "--scores", "rep/scores_kinematic.csv", "--out", "roc"], dir));
    let auc = fs::read_to_string(dir.join("roc/auc.csv")).unwrap();
    assert_eq!(auc.lines().count(), 1 + 3);
    assert!(dir.join("roc/roc_scores_kinematic_fused.csv").exists());
}

#[test]
fn errors_map_to_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = hwpd(&["features", "--manifest", "missing.csv", "--out", "x"], dir);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("IoFailure") && err.contains("missing.csv"), "{err}");

    assert_eq!(hwpd(&["features", "--bogus"], dir).status.code(), Some(1));
    assert_eq!(hwpd(&["synth", "--out", "x"], dir).status.code(), Some(1));
    assert_eq!(hwpd(&["synth", "--seed", "1", "--counts", "1,2", "--out", "x"], dir).status.code(), Some(1));
    let out = hwpd(&["evaluate", "--matrix", "m.csv", "--experiment", "pd-vs-pd", "--seed", "1", "--out", "x"], dir);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(hwpd(&["--help"], dir).status.code(), Some(0));

    fs::write(dir.join("bad.json"), "{").unwrap();
    let out = hwpd(&["synth", "--config", "bad.json", "--seed", "1", "--out", "x"], dir);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Format"));
}
