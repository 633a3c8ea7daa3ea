//! Feature vectors for every recording of a dataset manifest.

use std::path::Path;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::assembly::{extract_task_features, FeatureConfig, FeatureVector};
use super::manifest::FeatureManifest;
use crate::error::Result;
use crate::signal::{load_recording, DatasetEntry, TaskId};

/// A recording that produced no vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionFailure {
    pub subject_id: String,
    pub task: TaskId,
    pub error: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFeatures {
    /// In manifest order.
    pub vectors: Vec<FeatureVector>,
    pub failures: Vec<ExtractionFailure>,
    /// Rows with pressure while the pen was up, summed over recordings.
    pub parse_warnings: usize,
}

/// Extracts every entry in parallel. A recording whose features cannot be
/// computed is reported as a failure; unreadable files are errors.
pub fn extract_dataset(
    dataset_manifest: &Path,
    entries: &[DatasetEntry],
    manifest: &FeatureManifest,
    config: &FeatureConfig,
) -> Result<DatasetFeatures> {
    let results: Vec<(std::result::Result<FeatureVector, ExtractionFailure>, usize)> = entries
        .par_iter()
        .map(|e| {
            let (rec, warnings) = load_recording(dataset_manifest, e)?;
            let out = extract_task_features(&rec, manifest, config).map_err(|err| {
                warn!("{} {}: {err}", e.subject_id, e.task);
                ExtractionFailure {
                    subject_id: e.subject_id.clone(),
                    task: e.task,
                    error: err.name().to_string(),
                    message: err.to_string(),
                }
            });
            Ok((out, warnings.total()))
        })
        .collect::<Result<_>>()?;
    let mut out = DatasetFeatures { vectors: Vec::new(), failures: Vec::new(), parse_warnings: 0 };
    for (r, w) in results {
        out.parse_warnings += w;
        match r {
            Ok(v) => out.vectors.push(v),
            Err(f) => out.failures.push(f),
        }
    }
    Ok(out)
}
