//! Leave-one-out grid search and leave-one-out scoring. Standardization is
//! refit on the training rows of every round.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::knn::{squared_distance, vote};
use super::svm::{canonical_order, pairwise_sq, rbf_kernel_from_sq, solve_dual};
use super::{train_classifier, ClassifierKind, ClassifierParams, GridSpec, LabeledSet, MlpConfig};
use crate::error::{Error, Result};
use crate::features::StandardizationParams;
use crate::signal::TaskId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    GridSearch,
    Evaluation,
}

/// Provenance of the rows used in one leave-one-out round.
#[derive(Debug, Clone)]
pub struct FoldEvent<'a> {
    pub stage: Stage,
    pub task: Option<TaskId>,
    pub held_out: &'a str,
    pub standardized_on: Vec<&'a str>,
    pub trained_on: Vec<&'a str>,
}

pub trait FoldObserver: Sync {
    fn on_fold(&self, event: &FoldEvent<'_>);
}

pub struct NoObserver;

impl FoldObserver for NoObserver {
    fn on_fold(&self, _: &FoldEvent<'_>) {}
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub params: ClassifierParams,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: ClassifierParams,
    pub best_accuracy: f64,
    pub table: Vec<GridPoint>,
}

struct Fold {
    train: Vec<usize>,
    rows: Vec<Vec<f64>>,
    labels: Vec<u8>,
    test: Vec<f64>,
}

fn make_fold(data: &LabeledSet, held: usize, stage: Stage, observer: &dyn FoldObserver) -> Result<Fold> {
    let train: Vec<usize> = (0..data.len()).filter(|&j| j != held).collect();
    let raw: Vec<&[f64]> = train.iter().map(|&j| data.rows[j].as_slice()).collect();
    let std = StandardizationParams::fit(&raw)?;
    let rows = std.apply(&raw)?;
    let test = std.apply_row(&data.rows[held])?;
    let labels: Vec<u8> = train.iter().map(|&j| data.labels[j]).collect();
    LabeledSet::check_two_classes(&labels)?;
    let ids: Vec<&str> = train.iter().map(|&j| data.ids[j].as_str()).collect();
    observer.on_fold(&FoldEvent { stage, task: data.task, held_out: &data.ids[held], standardized_on: ids.clone(), trained_on: ids });
    Ok(Fold { train, rows, labels, test })
}

/// Predicted labels of the held-out row for every grid point.
fn fold_predictions(fold: &Fold, kind: ClassifierKind, points: &[ClassifierParams], seed: u64, mlp: &MlpConfig) -> Result<Vec<u8>> {
    match kind {
        ClassifierKind::Knn => {
            let d: Vec<f64> = fold.rows.iter().map(|r| squared_distance(r, &fold.test)).collect();
            Ok(points
                .iter()
                .map(|p| match p {
                    ClassifierParams::Knn { k } => kind.label(vote(&d, &fold.labels, *k)),
                    _ => unreachable!(),
                })
                .collect())
        }
        ClassifierKind::Svm => {
            let order = canonical_order(&fold.rows, &fold.labels);
            let rows: Vec<Vec<f64>> = order.iter().map(|&i| fold.rows[i].clone()).collect();
            let labels: Vec<u8> = order.iter().map(|&i| fold.labels[i]).collect();
            let d2 = pairwise_sq(&rows);
            let dt: Vec<f64> = rows.iter().map(|r| squared_distance(r, &fold.test)).collect();
            let mut out = Vec::with_capacity(points.len());
            let mut cached: Option<(f64, Vec<f64>)> = None;
            for p in points {
                let ClassifierParams::Svm { c, gamma } = p else { unreachable!() };
                if cached.as_ref().map_or(true, |(g, _)| g != gamma) {
                    cached = Some((*gamma, rbf_kernel_from_sq(&d2, *gamma)));
                }
                let k = &cached.as_ref().unwrap().1;
                let sol = solve_dual(k, &labels, *c)?;
                let f: f64 = sol
                    .alpha
                    .iter()
                    .zip(&labels)
                    .zip(&dt)
                    .filter(|((a, _), _)| **a > 0.0)
                    .map(|((&a, &l), d)| if l == 1 { a } else { -a } * (-gamma * d).exp())
                    .sum::<f64>()
                    + sol.bias;
                out.push(kind.label(f));
            }
            Ok(out)
        }
        ClassifierKind::Mlp => points
            .iter()
            .map(|p| {
                let m = train_classifier(&fold.rows, &fold.labels, p, seed, mlp)?;
                Ok(m.score(&fold.test)?.1)
            })
            .collect(),
    }
}

fn check_points(points: &[ClassifierParams], kind: ClassifierKind) -> Result<()> {
    if points.is_empty() || points.iter().any(|p| p.kind() != kind) {
        return Err(Error::InvalidClassifierParams(format!("grid points must all be {kind}")));
    }
    Ok(())
}

/// LOOCV accuracy of every grid point. The best point is the first with
/// maximal accuracy in `GridSpec::points` order.
pub fn grid_search_loocv(
    data: &LabeledSet,
    kind: ClassifierKind,
    grid: &GridSpec,
    seed: u64,
    mlp: &MlpConfig,
    observer: &dyn FoldObserver,
) -> Result<GridResult> {
    grid.validate(kind)?;
    if data.len() < 4 {
        return Err(Error::TooFewRows { len: data.len(), min: 4 });
    }
    LabeledSet::check_two_classes(&data.labels)?;
    let points = grid.points(kind);
    check_points(&points, kind)?;
    let per_fold: Vec<Vec<bool>> = (0..data.len())
        .into_par_iter()
        .map(|i| {
            let fold = make_fold(data, i, Stage::GridSearch, observer)?;
            debug_assert!(!fold.train.contains(&i));
            let pred = fold_predictions(&fold, kind, &points, seed, mlp)?;
            Ok(pred.into_iter().map(|p| p == data.labels[i]).collect())
        })
        .collect::<Result<_>>()?;
    let n = data.len() as f64;
    let table: Vec<GridPoint> = points
        .iter()
        .enumerate()
        .map(|(g, p)| GridPoint { params: p.clone(), accuracy: per_fold.iter().filter(|f| f[g]).count() as f64 / n })
        .collect();
    let mut best = 0;
    for (g, pt) in table.iter().enumerate() {
        if pt.accuracy > table[best].accuracy {
            best = g;
        }
    }
    Ok(GridResult { best: table[best].params.clone(), best_accuracy: table[best].accuracy, table })
}

/// Raw held-out score of every row under leave-one-out with fixed params.
pub fn loocv_scores(
    data: &LabeledSet,
    params: &ClassifierParams,
    seed: u64,
    mlp: &MlpConfig,
    observer: &dyn FoldObserver,
) -> Result<Vec<f64>> {
    if data.len() < 3 {
        return Err(Error::TooFewRows { len: data.len(), min: 3 });
    }
    (0..data.len())
        .into_par_iter()
        .map(|i| {
            let fold = make_fold(data, i, Stage::Evaluation, observer)?;
            let m = train_classifier(&fold.rows, &fold.labels, params, seed, mlp)?;
            Ok(m.score(&fold.test)?.0)
        })
        .collect()
}
