//! KNN, RBF-SVM and MLP classifiers with leave-one-out grid search.

pub mod grid;
pub mod knn;
pub mod mlp;
pub mod svm;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::StandardizationParams;
use crate::signal::TaskId;

pub use grid::{grid_search_loocv, loocv_scores, FoldEvent, FoldObserver, GridPoint, GridResult, NoObserver, Stage};
pub use knn::{knn_label, KnnModel};
pub use mlp::{train_mlp, MlpConfig, MlpModel};
pub use svm::{train_svm, SvmModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Knn,
    Svm,
    Mlp,
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Knn => "knn",
            Self::Svm => "svm",
            Self::Mlp => "mlp",
        })
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "knn" => Ok(Self::Knn),
            "svm" | "rbf-svm" => Ok(Self::Svm),
            "mlp" => Ok(Self::Mlp),
            _ => Err(Error::InvalidClassifierParams(format!("unknown classifier '{s}'"))),
        }
    }
}

impl ClassifierKind {
    /// Decision threshold on the raw score.
    pub fn threshold(self) -> f64 {
        match self {
            Self::Svm => 0.0,
            _ => 0.5,
        }
    }

    pub fn label(self, score: f64) -> u8 {
        match self {
            Self::Knn => knn_label(score),
            Self::Svm => u8::from(score > 0.0),
            Self::Mlp => u8::from(score >= 0.5),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassifierParams {
    Knn { k: usize },
    Svm { c: f64, gamma: f64 },
    Mlp { hidden: Vec<usize> },
}

impl ClassifierParams {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            Self::Knn { .. } => ClassifierKind::Knn,
            Self::Svm { .. } => ClassifierKind::Svm,
            Self::Mlp { .. } => ClassifierKind::Mlp,
        }
    }
}

impl fmt::Display for ClassifierParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Knn { k } => write!(f, "K={k}"),
            Self::Svm { c, gamma } => write!(f, "C={c} gamma={gamma}"),
            Self::Mlp { hidden } => write!(f, "hidden={hidden:?}"),
        }
    }
}

/// How an MLP grid value maps to a hidden-layer layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum MlpLayoutMode {
    /// One hidden layer of the given width.
    Width,
    /// The given number of hidden layers, each `width` units wide.
    Depth { width: usize },
}

/// Candidate values; a grid file may list only some fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub k: Vec<usize>,
    pub c: Vec<f64>,
    pub gamma: Vec<f64>,
    pub mlp: Vec<usize>,
    pub mlp_layout: MlpLayoutMode,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            k: vec![3, 5, 7, 9, 11, 15],
            c: vec![0.001, 0.01, 0.1, 1.0, 10.0, 1000.0, 2000.0, 10000.0],
            gamma: vec![1e-6, 1e-5, 1e-4, 0.01, 0.1, 1.0, 10.0, 1000.0],
            mlp: vec![5, 15, 30],
            mlp_layout: MlpLayoutMode::Width,
        }
    }
}

impl GridSpec {
    pub fn validate(&self, kind: ClassifierKind) -> Result<()> {
        let empty = match kind {
            ClassifierKind::Knn => self.k.is_empty(),
            ClassifierKind::Svm => self.c.is_empty() || self.gamma.is_empty(),
            ClassifierKind::Mlp => self.mlp.is_empty(),
        };
        if empty {
            return Err(Error::InvalidClassifierParams(format!("empty {kind} grid")));
        }
        let bad_num = |v: &f64| !(v.is_finite() && *v > 0.0);
        if self.k.contains(&0) || self.mlp.contains(&0) || self.c.iter().any(bad_num) || self.gamma.iter().any(bad_num) {
            return Err(Error::InvalidClassifierParams("grid candidates must be positive".into()));
        }
        Ok(())
    }

    pub fn layout(&self, size: usize) -> Vec<usize> {
        match self.mlp_layout {
            MlpLayoutMode::Width => vec![size],
            MlpLayoutMode::Depth { width } => vec![width; size],
        }
    }

    /// Grid points in tie-break order: the first point with the best
    /// accuracy wins.
    pub fn points(&self, kind: ClassifierKind) -> Vec<ClassifierParams> {
        let sorted_f = |v: &[f64]| {
            let mut v = v.to_vec();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let sorted_u = |v: &[usize]| {
            let mut v = v.to_vec();
            v.sort_unstable();
            v.dedup();
            v
        };
        match kind {
            ClassifierKind::Knn => sorted_u(&self.k).into_iter().map(|k| ClassifierParams::Knn { k }).collect(),
            ClassifierKind::Svm => {
                let gammas = sorted_f(&self.gamma);
                sorted_f(&self.c).into_iter().flat_map(|c| gammas.iter().map(move |&gamma| ClassifierParams::Svm { c, gamma })).collect()
            }
            ClassifierKind::Mlp => sorted_u(&self.mlp).into_iter().map(|s| ClassifierParams::Mlp { hidden: self.layout(s) }).collect(),
        }
    }
}

/// Rows with binary labels (0 = control, 1 = PD). Rows handed to the grid
/// search and LOOCV may hold NaN for absent features; they are standardized
/// inside each fold.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub task: Option<TaskId>,
}

impl LabeledSet {
    pub fn new(ids: Vec<String>, rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        if ids.len() != rows.len() || labels.len() != rows.len() {
            return Err(Error::DimensionMismatch { expected: rows.len(), got: labels.len().min(ids.len()) });
        }
        if let Some(dim) = rows.first().map(Vec::len) {
            if let Some(r) = rows.iter().find(|r| r.len() != dim) {
                return Err(Error::DimensionMismatch { expected: dim, got: r.len() });
            }
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::InvalidClassifierParams("labels must be 0 or 1".into()));
        }
        Ok(Self { ids, rows, labels, task: None })
    }

    pub fn with_task(mut self, task: TaskId) -> Self {
        self.task = Some(task);
        self
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn check_two_classes(labels: &[u8]) -> Result<()> {
        if !(labels.contains(&0) && labels.contains(&1)) {
            return Err(Error::SingleClass);
        }
        Ok(())
    }
}

fn check_finite(rows: &[Vec<f64>]) -> Result<()> {
    for (i, r) in rows.iter().enumerate() {
        if let Some(j) = r.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature { row: i, col: j });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassifierModel {
    Knn(KnnModel),
    Svm(SvmModel),
    Mlp(MlpModel),
}

impl ClassifierModel {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            Self::Knn(_) => ClassifierKind::Knn,
            Self::Svm(_) => ClassifierKind::Svm,
            Self::Mlp(_) => ClassifierKind::Mlp,
        }
    }

    /// Raw score and label.
    pub fn score(&self, x: &[f64]) -> Result<(f64, u8)> {
        let s = match self {
            Self::Knn(m) => m.score(x)?,
            Self::Svm(m) => m.decision(x)?,
            Self::Mlp(m) => m.output(x)?,
        };
        Ok((s, self.kind().label(s)))
    }
}

/// Trains on standardized, finite rows.
pub fn train_classifier(
    rows: &[Vec<f64>],
    labels: &[u8],
    params: &ClassifierParams,
    seed: u64,
    mlp: &MlpConfig,
) -> Result<ClassifierModel> {
    if rows.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: rows.len(), got: labels.len() });
    }
    LabeledSet::check_two_classes(labels)?;
    check_finite(rows)?;
    Ok(match params {
        ClassifierParams::Knn { k } => ClassifierModel::Knn(KnnModel::new(*k, rows.to_vec(), labels.to_vec())?),
        ClassifierParams::Svm { c, gamma } => ClassifierModel::Svm(train_svm(rows, labels, *c, *gamma)?),
        ClassifierParams::Mlp { hidden } => ClassifierModel::Mlp(train_mlp(rows, labels, hidden, seed, mlp)?),
    })
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Serialized model with everything needed to score raw feature rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub params: ClassifierParams,
    pub seed: u64,
    pub manifest_hash: String,
    pub columns: Vec<String>,
    pub standardization: StandardizationParams,
    pub model: ClassifierModel,
}

impl ModelFile {
    /// Scores a raw row (NaN = absent) over `columns`.
    pub fn score_raw(&self, row: &[f64]) -> Result<(f64, u8)> {
        let z = self.standardization.apply_row(row)?;
        self.model.score(&z)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported model format {}", m.format_version)));
        }
        Ok(m)
    }
}
