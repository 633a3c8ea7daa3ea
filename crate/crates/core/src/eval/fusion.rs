//! Per-task score sets and mean-rule fusion.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::metrics::{accuracy_confusion, roc_auc, Confusion, Roc};
use crate::classify::ClassifierKind;
use crate::error::{Error, Result};
use crate::signal::{Group, TaskId};

/// Two-group comparison; the second group is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Experiment {
    YHCvsPD,
    EHCvsPD,
    YHCvsEHC,
}

impl Experiment {
    pub const ALL: [Experiment; 3] = [Experiment::YHCvsPD, Experiment::EHCvsPD, Experiment::YHCvsEHC];

    /// (negative, positive) groups.
    pub fn groups(self) -> (Group, Group) {
        match self {
            Experiment::YHCvsPD => (Group::YHC, Group::PD),
            Experiment::EHCvsPD => (Group::EHC, Group::PD),
            Experiment::YHCvsEHC => (Group::YHC, Group::EHC),
        }
    }

    /// Class of a subject, or `None` when the group is not compared.
    pub fn label(self, group: Group) -> Option<u8> {
        let (neg, pos) = self.groups();
        if group == pos {
            Some(1)
        } else if group == neg {
            Some(0)
        } else {
            None
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::YHCvsPD => "yhc-vs-pd",
            Experiment::EHCvsPD => "ehc-vs-pd",
            Experiment::YHCvsEHC => "yhc-vs-ehc",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        Experiment::ALL
            .into_iter()
            .find(|e| e.as_str().replace('-', "") == key)
            .ok_or_else(|| Error::Format(format!("unknown experiment '{s}'")))
    }
}

/// Maps a raw classifier score to [0, 1]: logistic squash for SVM decision
/// values, identity for KNN vote fractions and MLP outputs.
pub fn normalize_score(kind: ClassifierKind, raw: f64) -> f64 {
    match kind {
        ClassifierKind::Svm => 1.0 / (1.0 + (-raw).exp()),
        ClassifierKind::Knn | ClassifierKind::Mlp => raw,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub subject_id: String,
    pub label: u8,
    pub raw: f64,
    pub normalized: f64,
    pub predicted: u8,
}

/// Held-out scores of one task (or of the fusion when `task` is `None`),
/// one entry per subject, sorted by subject id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet {
    pub experiment: Experiment,
    pub classifier: ClassifierKind,
    pub task: Option<TaskId>,
    pub entries: Vec<ScoreEntry>,
}

impl ScoreSet {
    /// Builds a task set from raw scores; labels follow the classifier's rule.
    pub fn from_raw(
        experiment: Experiment,
        classifier: ClassifierKind,
        task: TaskId,
        ids: &[String],
        labels: &[u8],
        raw: &[f64],
    ) -> Result<Self> {
        if ids.len() != labels.len() || raw.len() != labels.len() {
            return Err(Error::DimensionMismatch { expected: ids.len(), got: raw.len().min(labels.len()) });
        }
        let mut entries: Vec<ScoreEntry> = ids
            .iter()
            .zip(labels)
            .zip(raw)
            .map(|((id, &label), &raw)| ScoreEntry {
                subject_id: id.clone(),
                label,
                raw,
                normalized: normalize_score(classifier, raw),
                predicted: classifier.label(raw),
            })
            .collect();
        entries.sort_by(|a, b| a.subject_id.cmp(&b.subject_id));
        check_unique(&entries)?;
        Ok(Self { experiment, classifier, task: Some(task), entries })
    }

    pub fn labels(&self) -> Vec<u8> {
        self.entries.iter().map(|e| e.label).collect()
    }

    pub fn predictions(&self) -> Vec<u8> {
        self.entries.iter().map(|e| e.predicted).collect()
    }

    pub fn normalized(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.normalized).collect()
    }

    pub fn accuracy(&self) -> Result<(f64, Confusion)> {
        accuracy_confusion(&self.labels(), &self.predictions())
    }

    /// ROC over normalized scores; the squash is monotone, so the curve
    /// equals the raw-score curve up to threshold values.
    pub fn roc(&self) -> Result<Roc> {
        roc_auc(&self.normalized(), &self.labels())
    }
}

fn check_unique(entries: &[ScoreEntry]) -> Result<()> {
    if let Some(w) = entries.windows(2).find(|w| w[0].subject_id == w[1].subject_id) {
        return Err(Error::Format(format!("subject {} scored twice", w[0].subject_id)));
    }
    Ok(())
}

/// Mean of each subject's available normalized scores over every subject
/// seen in any set; label = fused ≥ 0.5.
pub fn fuse_scores_mean(sets: &[ScoreSet]) -> Result<ScoreSet> {
    let subjects: BTreeSet<&str> = sets.iter().flat_map(|s| s.entries.iter().map(|e| e.subject_id.as_str())).collect();
    let subjects: Vec<String> = subjects.into_iter().map(str::to_string).collect();
    fuse_scores_mean_for(sets, &subjects)
}

/// As [`fuse_scores_mean`] over a fixed subject list; a listed subject
/// without any score is an error.
pub fn fuse_scores_mean_for(sets: &[ScoreSet], subjects: &[String]) -> Result<ScoreSet> {
    let first = sets.first().ok_or(Error::EmptyInput)?;
    let mut tasks = BTreeSet::new();
    for s in sets {
        if s.experiment != first.experiment || s.classifier != first.classifier {
            return Err(Error::Format("score sets mix experiments or classifiers".into()));
        }
        let task = s.task.ok_or_else(|| Error::Format("fused sets cannot be fused again".into()))?;
        if !tasks.insert(task) {
            return Err(Error::Format(format!("task {task} appears twice")));
        }
    }
    // accumulate in task order so the result does not depend on input order
    let mut ordered: Vec<&ScoreSet> = sets.iter().collect();
    ordered.sort_by_key(|s| s.task);
    let mut acc: BTreeMap<&str, (u8, Vec<f64>)> = BTreeMap::new();
    for s in ordered {
        for e in &s.entries {
            let slot = acc.entry(e.subject_id.as_str()).or_insert((e.label, Vec::new()));
            if slot.0 != e.label {
                return Err(Error::Format(format!("subject {} has conflicting labels", e.subject_id)));
            }
            slot.1.push(e.normalized);
        }
    }
    let mut entries = Vec::with_capacity(subjects.len());
    let mut sorted: Vec<&String> = subjects.iter().collect();
    sorted.sort();
    sorted.dedup();
    for id in sorted {
        let (label, values) = acc.get(id.as_str()).ok_or_else(|| Error::NoScores(id.clone()))?;
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        entries.push(ScoreEntry { subject_id: id.clone(), label: *label, raw: mean, normalized: mean, predicted: u8::from(mean >= 0.5) });
    }
    Ok(ScoreSet { experiment: first.experiment, classifier: first.classifier, task: None, entries })
}

pub const SCORES_HEADER: &str = "experiment,classifier,task,subject_id,label,raw,normalized,predicted";

/// One row per entry of every set; fused sets use the task name `fused`.
pub fn write_scores_csv<W: Write>(w: W, sets: &[ScoreSet]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    wtr.write_record(SCORES_HEADER.split(','))?;
    for s in sets {
        let task = s.task.map_or("fused".to_string(), |t| t.to_string());
        for e in &s.entries {
            wtr.write_record([
                s.experiment.as_str(),
                &s.classifier.to_string(),
                &task,
                &e.subject_id,
                &e.label.to_string(),
                &format!("{}", e.raw),
                &format!("{}", e.normalized),
                &e.predicted.to_string(),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Inverse of [`write_scores_csv`]; sets come back in first-seen order.
pub fn read_scores_csv<R: Read>(r: R) -> Result<Vec<ScoreSet>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(r);
    if rdr.headers()?.iter().collect::<Vec<_>>().join(",") != SCORES_HEADER {
        return Err(Error::Format(format!("score file header must be '{SCORES_HEADER}'")));
    }
    let mut sets: Vec<ScoreSet> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |reason: String| Error::MalformedRow { line: i + 2, reason };
        if rec.len() != 8 {
            return Err(bad(format!("expected 8 fields, found {}", rec.len())));
        }
        let experiment: Experiment = rec[0].parse().map_err(|e: Error| bad(e.to_string()))?;
        let classifier: ClassifierKind = rec[1].parse().map_err(|e: Error| bad(e.to_string()))?;
        let task = if &rec[2] == "fused" { None } else { Some(rec[2].parse::<TaskId>().map_err(|e| bad(e.to_string()))?) };
        let num = |j: usize| rec[j].parse::<f64>().map_err(|_| bad(format!("field {} is not a number", j + 1)));
        let bit = |j: usize| match &rec[j] {
            "0" => Ok(0u8),
            "1" => Ok(1u8),
            other => Err(bad(format!("field {} must be 0 or 1, found '{other}'", j + 1))),
        };
        let entry = ScoreEntry { subject_id: rec[3].to_string(), label: bit(4)?, raw: num(5)?, normalized: num(6)?, predicted: bit(7)? };
        match sets.iter_mut().find(|s| s.experiment == experiment && s.classifier == classifier && s.task == task) {
            Some(s) => s.entries.push(entry),
            None => sets.push(ScoreSet { experiment, classifier, task, entries: vec![entry] }),
        }
    }
    for s in &mut sets {
        s.entries.sort_by(|a, b| a.subject_id.cmp(&b.subject_id));
        check_unique(&s.entries)?;
    }
    Ok(sets)
}
