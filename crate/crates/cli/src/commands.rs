use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use hwpd_core::classify::{
    grid_search_loocv, train_classifier, ClassifierKind, GridSpec, LabeledSet, MlpConfig, ModelFile, MODEL_FORMAT_VERSION,
};
use hwpd_core::eval::{
    fuse_scores_mean, read_scores_csv, run_protocol, write_roc_csv, write_scores_csv, write_table_csv, Experiment, ProtocolConfig,
    ProvenanceAudit, ScoreSet,
};
use hwpd_core::features::{
    extract_dataset, read_matrix_csv, write_matrix_csv, FeatureConfig, FeatureManifest, FeatureSelection, FeatureVector, ManifestConfig,
    StandardizationParams,
};
use hwpd_core::signal::{read_dataset_manifest, TaskId};
use hwpd_core::synth::{synth_cohort, CohortConfig};
use hwpd_core::Error;
use serde_json::{json, Value};

use crate::output::{read_file, sha256_hex, OutDir};
use crate::{EvaluateArgs, FeaturesArgs, FuseArgs, Input, ModelArgs, RocArgs, SynthArgs, TrainArgs};

pub const FEATURE_MANIFEST_FILE: &str = "feature_manifest.csv";
pub const MATRIX_FILE: &str = "features.csv";

pub enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Data(e.into())
    }
}

type Outcome = Result<(), Failure>;

fn parse_flag<T: std::str::FromStr>(flag: &str, value: &str) -> Result<T, Failure>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| Failure::Usage(format!("--{flag}: {e}")))
}

fn parse_counts(s: &str) -> Result<(usize, usize, usize), Failure> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(Failure::Usage(format!("--counts expects PD,EHC,YHC, got '{s}'")));
    }
    let n = |i: usize| parse_flag::<usize>("counts", parts[i]);
    Ok((n(0)?, n(1)?, n(2)?))
}

pub fn synth(a: SynthArgs) -> Outcome {
    let mut config = match &a.config {
        Some(p) => serde_json::from_slice::<CohortConfig>(&read_file(p)?).map_err(|e| Error::Format(format!("{}: {e}", p.display())))?,
        None => CohortConfig::default(),
    };
    if let Some(c) = &a.counts {
        let (pd, ehc, yhc) = parse_counts(c)?;
        config.counts = CohortConfig::with_counts(pd, ehc, yhc).counts;
    }
    let mut out = OutDir::create(&a.out)?;
    out.note(format!("synthesizing {} subjects with seed {}", config.counts.values().sum::<usize>(), a.seed));
    let cohort = synth_cohort(&config, a.seed, &a.out)?;
    let manifest_hash = sha256_hex(&read_file(&cohort.manifest_path)?);
    out.note(format!("wrote {} recordings", cohort.entries.len()));
    out.provenance("synth", &serde_json::to_value(&config)?, Some(a.seed), Some(&manifest_hash))?;
    out.finish()?;
    Ok(())
}

fn extract(manifest_path: &Path, feature_manifest: &FeatureManifest, out: &mut OutDir) -> Result<(Vec<FeatureVector>, Value), Failure> {
    let entries = read_dataset_manifest(manifest_path)?;
    out.note(format!("extracting features of {} recordings", entries.len()));
    let data = extract_dataset(manifest_path, &entries, feature_manifest, &FeatureConfig::default())?;
    out.note(format!("{} vectors, {} failures, {} parse warnings", data.vectors.len(), data.failures.len(), data.parse_warnings));
    if data.vectors.is_empty() {
        return Err(Error::EmptyInput.into());
    }
    let mut failures = String::from("subject_id,task,error,message\n");
    for f in &data.failures {
        failures.push_str(&format!("{},{},{},\"{}\"\n", f.subject_id, f.task, f.error, f.message.replace('"', "'")));
    }
    out.write("extraction_failures.csv", failures.as_bytes())?;
    let input = json!({
        "dataset_manifest": manifest_path.display().to_string(),
        "dataset_manifest_sha256": sha256_hex(&read_file(manifest_path)?),
        "recordings": entries.len(),
        "failures": data.failures.len(),
    });
    Ok((data.vectors, input))
}

pub fn features(a: FeaturesArgs) -> Outcome {
    let fm = FeatureManifest::default_with(ManifestConfig { with_range_functional: a.with_range });
    let mut out = OutDir::create(&a.out)?;
    let (vectors, input) = extract(&a.manifest, &fm, &mut out)?;
    let mut buf = Vec::new();
    write_matrix_csv(&mut buf, &fm, &vectors)?;
    out.write(MATRIX_FILE, &buf)?;
    out.write(FEATURE_MANIFEST_FILE, fm.to_csv_string().as_bytes())?;
    let config = json!({ "input": input, "with_range": a.with_range, "feature_config": FeatureConfig::default() });
    out.provenance("features", &config, None, Some(&fm.hash()))?;
    out.finish()?;
    Ok(())
}

fn load_input(input: &Input, out: &mut OutDir) -> Result<(Vec<FeatureVector>, FeatureManifest, Value), Failure> {
    if let Some(m) = &input.manifest {
        let fm = FeatureManifest::default();
        let (v, desc) = extract(m, &fm, out)?;
        return Ok((v, fm, desc));
    }
    let path = input.matrix.as_ref().expect("clap requires one input");
    let dir = path.parent().unwrap_or(Path::new("."));
    let fm_path = dir.join(FEATURE_MANIFEST_FILE);
    let fm = if fm_path.exists() { FeatureManifest::read_csv(&read_file(&fm_path)?[..])? } else { FeatureManifest::default() };
    let bytes = read_file(path)?;
    let vectors = read_matrix_csv(&bytes[..], &fm)?;
    out.note(format!("read {} vectors from {}", vectors.len(), path.display()));
    Ok((vectors, fm, json!({ "matrix": path.display().to_string(), "matrix_sha256": sha256_hex(&bytes) })))
}

fn load_grid(path: &Option<PathBuf>) -> Result<GridSpec, Failure> {
    match path {
        Some(p) => Ok(serde_json::from_slice(&read_file(p)?).map_err(|e| Error::Format(format!("{}: {e}", p.display())))?),
        None => Ok(GridSpec::default()),
    }
}

struct Common {
    experiment: Experiment,
    classifier: ClassifierKind,
    grid: GridSpec,
}

fn common(a: &ModelArgs) -> Result<Common, Failure> {
    let experiment = parse_flag("experiment", &a.experiment)?;
    let classifier = parse_flag("classifier", &a.classifier)?;
    let grid = load_grid(&a.grid)?;
    grid.validate(classifier)?;
    Ok(Common { experiment, classifier, grid })
}

fn parse_selections(s: &str) -> Result<Vec<FeatureSelection>, Failure> {
    s.split(',').map(|p| parse_flag("features", p)).collect()
}

pub fn train(a: TrainArgs) -> Outcome {
    let c = common(&a.common)?;
    let selection: FeatureSelection = parse_flag("features", &a.features)?;
    let task: TaskId = parse_flag("task", &a.task)?;
    let mut out = OutDir::create(&a.common.out)?;
    let (vectors, fm, input) = load_input(&a.common.input, &mut out)?;
    let columns = fm.selection_columns(selection);
    let mut rows: BTreeMap<&str, (Vec<f64>, u8)> = BTreeMap::new();
    for v in vectors.iter().filter(|v| v.task == task) {
        if let Some(label) = c.experiment.label(v.group) {
            let full = v.to_nan_row();
            if rows.insert(&v.subject_id, (columns.iter().map(|&j| full[j]).collect(), label)).is_some() {
                return Err(Error::Format(format!("subject {} has two {task} vectors", v.subject_id)).into());
            }
        }
    }
    let ids: Vec<String> = rows.keys().map(|s| s.to_string()).collect();
    let (raw, labels): (Vec<Vec<f64>>, Vec<u8>) = rows.into_values().unzip();
    let data = LabeledSet::new(ids, raw, labels)?.with_task(task);
    let mlp = MlpConfig::default();
    let audit = ProvenanceAudit::default();
    out.note(format!("grid search over {} {task} subjects", data.len()));
    let grid = grid_search_loocv(&data, c.classifier, &c.grid, a.common.seed, &mlp, &audit)?;
    out.note(format!("selected {} with LOOCV accuracy {:.4}", grid.best, grid.best_accuracy));
    let standardization = StandardizationParams::fit(&data.rows)?;
    let z = standardization.apply(&data.rows)?;
    let model = train_classifier(&z, &data.labels, &grid.best, a.common.seed, &mlp)?;
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        params: grid.best.clone(),
        seed: a.common.seed,
        manifest_hash: fm.hash(),
        columns: columns.iter().map(|&j| fm.entries()[j].name.clone()).collect(),
        standardization,
        model,
    };
    out.write("model.json", file.to_json()?.as_bytes())?;
    let mut table = String::from("params,accuracy\n");
    for p in &grid.table {
        table.push_str(&format!("\"{}\",{}\n", p.params, p.accuracy));
    }
    out.write("grid.csv", table.as_bytes())?;
    let config = json!({
        "input": input,
        "experiment": c.experiment,
        "classifier": c.classifier,
        "features": selection,
        "task": task,
        "grid": c.grid,
        "mlp": mlp,
    });
    out.provenance("train", &config, Some(a.common.seed), Some(&fm.hash()))?;
    out.finish()?;
    Ok(())
}

pub fn evaluate(a: EvaluateArgs) -> Outcome {
    let c = common(&a.common)?;
    let selections = parse_selections(&a.features)?;
    let mut cfg = ProtocolConfig::new(c.experiment, c.classifier, a.common.seed);
    cfg.grid = c.grid;
    cfg.selections = selections;
    if let Some(e) = a.mlp_epochs {
        cfg.mlp.epochs = e;
    }
    let mut out = OutDir::create(&a.common.out)?;
    let (vectors, fm, input) = load_input(&a.common.input, &mut out)?;
    let audit = ProvenanceAudit::default();
    out.note(format!("evaluating {} on {} vectors", c.experiment, vectors.len()));
    let report = run_protocol(&vectors, &fm, &cfg, &audit)?;
    let counts = audit.counts();
    out.note(format!("{} grid folds, {} evaluation folds, clean: {}", counts.grid_folds, counts.evaluation_folds, counts.is_clean()));
    let config = json!({ "input": input, "protocol": cfg });
    let provenance = out.provenance("evaluate", &config, Some(cfg.seed), Some(&fm.hash()))?;
    out.write_json("report.json", &json!({ "provenance": provenance, "audit": counts, "report": report }))?;
    let mut table = Vec::new();
    write_table_csv(&mut table, &report)?;
    out.write("table.csv", &table)?;
    for fam in &report.families {
        let mut sets: Vec<ScoreSet> = fam.tasks.iter().map(|t| t.scores.clone()).collect();
        sets.push(fam.fused.scores.clone());
        let mut buf = Vec::new();
        write_scores_csv(&mut buf, &sets)?;
        out.write(&format!("scores_{}.csv", fam.selection), &buf)?;
        let mut buf = Vec::new();
        write_roc_csv(&mut buf, &fam.fused.roc)?;
        out.write(&format!("roc_{}.csv", fam.selection), &buf)?;
        out.note(format!("{}: fused accuracy {:.4}, AUC {:.4}", fam.selection, fam.fused.accuracy, fam.fused.roc.auc));
    }
    if !counts.is_clean() {
        return Err(Error::Format(format!("row provenance audit failed: {counts:?}")).into());
    }
    out.finish()?;
    Ok(())
}

fn read_sets(paths: &[PathBuf]) -> Result<Vec<(PathBuf, ScoreSet)>, Failure> {
    let mut all = Vec::new();
    for p in paths {
        let sets = read_scores_csv(&read_file(p)?[..]).map_err(|e| match e {
            Error::Format(m) => Error::Format(format!("{}: {m}", p.display())),
            other => other,
        })?;
        all.extend(sets.into_iter().map(|s| (p.clone(), s)));
    }
    Ok(all)
}

pub fn fuse(a: FuseArgs) -> Outcome {
    let sets: Vec<ScoreSet> = read_sets(&a.scores)?.into_iter().map(|(_, s)| s).filter(|s| s.task.is_some()).collect();
    let mut out = OutDir::create(&a.out)?;
    out.note(format!("fusing {} task score sets", sets.len()));
    let fused = fuse_scores_mean(&sets)?;
    let (accuracy, confusion) = fused.accuracy()?;
    let roc = fused.roc()?;
    let mut buf = Vec::new();
    write_scores_csv(&mut buf, std::slice::from_ref(&fused))?;
    out.write("fused_scores.csv", &buf)?;
    let mut buf = Vec::new();
    write_roc_csv(&mut buf, &roc)?;
    out.write("roc_fused.csv", &buf)?;
    let tasks: Vec<TaskId> = sets.iter().filter_map(|s| s.task).collect();
    let inputs: Vec<String> = a.scores.iter().map(|p| p.display().to_string()).collect();
    let provenance = out.provenance("fuse", &json!({ "scores": inputs, "tasks": tasks }), None, None)?;
    out.write_json(
        "fused.json",
        &json!({ "provenance": provenance, "tasks": tasks, "subjects": fused.entries.len(), "accuracy": accuracy, "confusion": confusion, "auc": roc.auc }),
    )?;
    out.note(format!("fused accuracy {accuracy:.4}, AUC {:.4}", roc.auc));
    out.finish()?;
    Ok(())
}

pub fn roc(a: RocArgs) -> Outcome {
    let sets = read_sets(&a.scores)?;
    let mut out = OutDir::create(&a.out)?;
    let mut summary = String::from("file,task,auc\n");
    for (path, s) in &sets {
        let stem = path.file_stem().map_or("scores".into(), |s| s.to_string_lossy().into_owned());
        let task = s.task.map_or("fused".to_string(), |t| t.to_string());
        let roc = s.roc()?;
        let mut buf = Vec::new();
        write_roc_csv(&mut buf, &roc)?;
        out.write(&format!("roc_{stem}_{task}.csv"), &buf)?;
        summary.push_str(&format!("{stem},{task},{}\n", roc.auc));
    }
    out.write("auc.csv", summary.as_bytes())?;
    let inputs: Vec<String> = a.scores.iter().map(|p| p.display().to_string()).collect();
    out.provenance("roc", &json!({ "scores": inputs }), None, None)?;
    out.note(format!("{} ROC curves", sets.len()));
    out.finish()?;
    Ok(())
}
