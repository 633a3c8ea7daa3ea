//! Optimize meta-parameters on Circle, score the other tasks by
//! leave-one-subject-out, fuse by the mean rule.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::sync::Mutex;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fusion::{fuse_scores_mean_for, Experiment, ScoreSet};
use super::metrics::{Confusion, Roc};
use crate::classify::{
    grid_search_loocv, loocv_scores, ClassifierKind, ClassifierParams, FoldEvent, FoldObserver, GridPoint, GridSpec, LabeledSet, MlpConfig,
    Stage,
};
use crate::error::{Error, Result};
use crate::features::{FeatureManifest, FeatureSelection, FeatureVector};
use crate::signal::TaskId;

/// Plain-language statement of the protocol, written into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolStatement {
    pub optimization_task: TaskId,
    pub meta_parameter_selection: String,
    pub test_protocol: String,
    pub fusion: String,
}

impl Default for ProtocolStatement {
    fn default() -> Self {
        Self {
            optimization_task: TaskId::OPTIMIZATION,
            meta_parameter_selection: "grid search scored by leave-one-subject-out accuracy on the Circle task only".into(),
            test_protocol: "leave-one-subject-out per test task with the selected meta-parameters; standardization refit on the training subjects of every fold; Circle is training-only".into(),
            fusion: "mean of each subject's normalized scores over the available test tasks (SVM decision values pass through a logistic squash); fused label = mean >= 0.5".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub experiment: Experiment,
    pub classifier: ClassifierKind,
    pub selections: Vec<FeatureSelection>,
    pub grid: GridSpec,
    pub seed: u64,
    pub mlp: MlpConfig,
}

impl ProtocolConfig {
    pub fn new(experiment: Experiment, classifier: ClassifierKind, seed: u64) -> Self {
        Self {
            experiment,
            classifier,
            selections: FeatureSelection::ALL.to_vec(),
            grid: GridSpec::default(),
            seed,
            mlp: MlpConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub task: TaskId,
    pub accuracy: f64,
    pub confusion: Confusion,
    pub auc: f64,
    pub scores: ScoreSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedResult {
    pub accuracy: f64,
    pub confusion: Confusion,
    pub roc: Roc,
    pub scores: ScoreSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyResult {
    pub selection: FeatureSelection,
    pub selected: ClassifierParams,
    /// Leave-one-out accuracy of `selected` on the optimization task.
    pub optimization_accuracy: f64,
    pub grid: Vec<GridPoint>,
    pub tasks: Vec<TaskResult>,
    /// Test tasks this family does not cover.
    pub omitted: Vec<TaskId>,
    pub fused: FusedResult,
}

impl FamilyResult {
    pub fn task(&self, task: TaskId) -> Option<&TaskResult> {
        self.tasks.iter().find(|t| t.task == task)
    }

    pub fn best_task_accuracy(&self) -> f64 {
        self.tasks.iter().map(|t| t.accuracy).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub protocol: ProtocolStatement,
    pub experiment: Experiment,
    pub classifier: ClassifierKind,
    pub seed: u64,
    pub manifest_hash: String,
    pub subjects: usize,
    pub families: Vec<FamilyResult>,
}

impl EvaluationReport {
    pub fn family(&self, sel: FeatureSelection) -> Option<&FamilyResult> {
        self.families.iter().find(|f| f.selection == sel)
    }
}

/// Task vectors of the compared subjects: subject id → task → vector.
fn index_vectors<'a>(
    vectors: &'a [FeatureVector],
    experiment: Experiment,
) -> Result<BTreeMap<&'a str, BTreeMap<TaskId, &'a FeatureVector>>> {
    let mut by_subject: BTreeMap<&str, BTreeMap<TaskId, &FeatureVector>> = BTreeMap::new();
    for v in vectors.iter().filter(|v| experiment.label(v.group).is_some()) {
        let tasks = by_subject.entry(v.subject_id.as_str()).or_default();
        if tasks.insert(v.task, v).is_some() {
            return Err(Error::Format(format!("subject {} has two {} vectors", v.subject_id, v.task)));
        }
        if let Some(other) = tasks.values().find(|o| o.group != v.group) {
            return Err(Error::Format(format!("subject {} is listed as {} and {}", v.subject_id, other.group, v.group)));
        }
    }
    Ok(by_subject)
}

fn labeled_set(
    by_subject: &BTreeMap<&str, BTreeMap<TaskId, &FeatureVector>>,
    task: TaskId,
    columns: &[usize],
    experiment: Experiment,
) -> Result<LabeledSet> {
    let (mut ids, mut rows, mut labels) = (Vec::new(), Vec::new(), Vec::new());
    for (id, tasks) in by_subject {
        if let Some(v) = tasks.get(&task) {
            let full = v.to_nan_row();
            ids.push(id.to_string());
            rows.push(columns.iter().map(|&c| full[c]).collect());
            labels.push(experiment.label(v.group).expect("filtered on indexing"));
        }
    }
    Ok(LabeledSet::new(ids, rows, labels)?.with_task(task))
}

fn run_family(
    by_subject: &BTreeMap<&str, BTreeMap<TaskId, &FeatureVector>>,
    test_tasks: &[TaskId],
    manifest: &FeatureManifest,
    cfg: &ProtocolConfig,
    selection: FeatureSelection,
    observer: &dyn FoldObserver,
) -> Result<FamilyResult> {
    let columns = manifest.selection_columns(selection);
    let circle = labeled_set(by_subject, TaskId::OPTIMIZATION, &columns, cfg.experiment)?;
    let grid = grid_search_loocv(&circle, cfg.classifier, &cfg.grid, cfg.seed, &cfg.mlp, observer)?;
    info!("{selection}: selected {} (Circle LOOCV accuracy {:.3})", grid.best, grid.best_accuracy);
    let (covered, omitted): (Vec<TaskId>, Vec<TaskId>) =
        test_tasks.iter().partition(|t| !(selection == FeatureSelection::Neuromotor && t.skips_neuromotor()));
    let tasks: Vec<TaskResult> = covered
        .par_iter()
        .map(|&task| {
            let data = labeled_set(by_subject, task, &columns, cfg.experiment)?;
            let raw = loocv_scores(&data, &grid.best, cfg.seed, &cfg.mlp, observer)?;
            let scores = ScoreSet::from_raw(cfg.experiment, cfg.classifier, task, &data.ids, &data.labels, &raw)?;
            let (accuracy, confusion) = scores.accuracy()?;
            let auc = scores.roc()?.auc;
            Ok(TaskResult { task, accuracy, confusion, auc, scores })
        })
        .collect::<Result<_>>()?;
    let sets: Vec<ScoreSet> = tasks.iter().map(|t| t.scores.clone()).collect();
    let subjects: Vec<String> = by_subject.keys().map(|s| s.to_string()).collect();
    let scores = fuse_scores_mean_for(&sets, &subjects)?;
    let (accuracy, confusion) = scores.accuracy()?;
    let roc = scores.roc()?;
    info!("{selection}: fused accuracy {accuracy:.3}, AUC {:.3}", roc.auc);
    Ok(FamilyResult {
        selection,
        selected: grid.best,
        optimization_accuracy: grid.best_accuracy,
        grid: grid.table,
        tasks,
        omitted,
        fused: FusedResult { accuracy, confusion, roc, scores },
    })
}

/// Runs the protocol for every configured feature selection. Every compared
/// subject needs a Circle vector; other tasks may be missing per subject.
pub fn run_protocol(
    vectors: &[FeatureVector],
    manifest: &FeatureManifest,
    cfg: &ProtocolConfig,
    observer: &dyn FoldObserver,
) -> Result<EvaluationReport> {
    if cfg.selections.is_empty() {
        return Err(Error::InvalidClassifierParams("no feature selection requested".into()));
    }
    if let Some(v) = vectors.iter().find(|v| v.len() != manifest.len()) {
        return Err(Error::DimensionMismatch { expected: manifest.len(), got: v.len() });
    }
    let by_subject = index_vectors(vectors, cfg.experiment)?;
    if by_subject.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some((id, _)) = by_subject.iter().find(|(_, t)| !t.contains_key(&TaskId::OPTIMIZATION)) {
        return Err(Error::MissingTask(id.to_string()));
    }
    let present: BTreeSet<TaskId> = by_subject.values().flat_map(|t| t.keys().copied()).collect();
    let test_tasks: Vec<TaskId> = TaskId::ALL.into_iter().filter(|t| !t.is_optimization_task() && present.contains(t)).collect();
    if test_tasks.is_empty() {
        return Err(Error::EmptyInput);
    }
    for t in TaskId::ALL.iter().filter(|t| !t.is_optimization_task() && !present.contains(t)) {
        warn!("task {t} has no vectors and is not evaluated");
    }
    let mut selections = cfg.selections.clone();
    selections.sort();
    selections.dedup();
    let families =
        selections.iter().map(|&sel| run_family(&by_subject, &test_tasks, manifest, cfg, sel, observer)).collect::<Result<_>>()?;
    Ok(EvaluationReport {
        protocol: ProtocolStatement::default(),
        experiment: cfg.experiment,
        classifier: cfg.classifier,
        seed: cfg.seed,
        manifest_hash: manifest.hash(),
        subjects: by_subject.len(),
        families,
    })
}

/// Accuracy table: one row per task, one column per feature selection.
/// Circle is marked `training` and carries the grid-search accuracy; the
/// last row holds the fused accuracy. Omitted cells are empty.
pub fn write_table_csv<W: Write>(mut w: W, report: &EvaluationReport) -> Result<()> {
    let fams = &report.families;
    let cols: Vec<&str> = fams.iter().map(|f| f.selection.as_str()).collect();
    writeln!(w, "task,role,{}", cols.join(","))?;
    let cells = |get: &dyn Fn(&FamilyResult) -> Option<f64>| {
        fams.iter().map(|f| get(f).map_or(String::new(), |a| format!("{a:.4}"))).collect::<Vec<_>>().join(",")
    };
    writeln!(w, "{},training,{}", TaskId::OPTIMIZATION, cells(&|f| Some(f.optimization_accuracy)))?;
    let tasks: BTreeSet<TaskId> = fams.iter().flat_map(|f| f.tasks.iter().map(|t| t.task).chain(f.omitted.iter().copied())).collect();
    for task in TaskId::ALL.into_iter().filter(|t| tasks.contains(t)) {
        writeln!(w, "{task},test,{}", cells(&|f| f.task(task).map(|t| t.accuracy)))?;
    }
    writeln!(w, "Fusion,fused,{}", cells(&|f| Some(f.fused.accuracy)))?;
    Ok(())
}

/// Tallies row provenance over every leave-one-out round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AuditCounts {
    pub grid_folds: usize,
    pub evaluation_folds: usize,
    /// Rounds whose held-out subject was among the standardization rows.
    pub standardization_leaks: usize,
    /// Rounds whose held-out subject was among the training rows.
    pub training_leaks: usize,
    /// Grid-search rounds on any task other than Circle.
    pub grid_outside_optimization_task: usize,
    /// Rounds that scored one subject against itself or repeated a row.
    pub malformed_folds: usize,
}

impl AuditCounts {
    pub fn is_clean(&self) -> bool {
        self.standardization_leaks == 0 && self.training_leaks == 0 && self.grid_outside_optimization_task == 0 && self.malformed_folds == 0
    }
}

#[derive(Debug, Default)]
pub struct ProvenanceAudit {
    counts: Mutex<AuditCounts>,
}

impl ProvenanceAudit {
    pub fn counts(&self) -> AuditCounts {
        *self.counts.lock().expect("audit lock")
    }
}

impl FoldObserver for ProvenanceAudit {
    fn on_fold(&self, e: &FoldEvent<'_>) {
        let mut c = self.counts.lock().expect("audit lock");
        match e.stage {
            Stage::GridSearch => {
                c.grid_folds += 1;
                if e.task != Some(TaskId::OPTIMIZATION) {
                    c.grid_outside_optimization_task += 1;
                }
            }
            Stage::Evaluation => c.evaluation_folds += 1,
        }
        if e.standardized_on.contains(&e.held_out) {
            c.standardization_leaks += 1;
        }
        if e.trained_on.contains(&e.held_out) {
            c.training_leaks += 1;
        }
        let distinct: BTreeSet<&str> = e.trained_on.iter().copied().collect();
        if distinct.len() != e.trained_on.len() {
            c.malformed_folds += 1;
        }
    }
}
