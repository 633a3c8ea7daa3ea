use serde::{Deserialize, Serialize};

use super::manifest::{FeatureFamily, FeatureManifest};
use crate::error::{Error, Result};
use crate::kinematic::{global_kinematic_features, KinematicFeatureSet};
use crate::neuromotor::{task_neuromotor_features, NeuromotorFeatureSet, SigmaLognormalConfig};
use crate::nonlinear::{nonlinear_features, NonlinearConfig, NonlinearFeatureSet};
use crate::signal::{preprocess, segment_strokes, Group, PreprocessConfig, TaskId, TaskRecording, DEFAULT_MIN_STROKE_SAMPLES};

/// One task of one subject, aligned to a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub subject_id: String,
    pub group: Group,
    pub task: TaskId,
    /// Absent entries hold 0.0.
    pub values: Vec<f64>,
    /// `false` marks a feature that was not computed.
    pub mask: Vec<bool>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        self.mask[i].then_some(self.values[i])
    }

    /// Values with absent entries as NaN.
    pub fn to_nan_row(&self) -> Vec<f64> {
        self.values.iter().zip(&self.mask).map(|(&v, &m)| if m { v } else { f64::NAN }).collect()
    }

    pub fn present_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

fn check_names<'a>(family: FeatureFamily, produced: impl Iterator<Item = &'a str>, manifest: &FeatureManifest) -> Result<()> {
    let expected = manifest.family_names(family);
    let produced: Vec<&str> = produced.collect();
    if produced != expected {
        let missing = expected.iter().find(|n| !produced.contains(n));
        let extra = produced.iter().find(|n| !expected.contains(n));
        return Err(Error::ManifestMismatch(format!(
            "{} block differs from manifest (missing {:?}, unexpected {:?})",
            family.prefix(),
            missing,
            extra
        )));
    }
    Ok(())
}

/// Places the three feature blocks into manifest slots. A `None`
/// neuromotor block leaves those slots absent.
pub fn assemble_task_vector(
    rec: &TaskRecording,
    kinematic: &KinematicFeatureSet,
    nonlinear: &NonlinearFeatureSet,
    neuromotor: Option<&NeuromotorFeatureSet>,
    manifest: &FeatureManifest,
) -> Result<FeatureVector> {
    check_names(FeatureFamily::Kinematic, kinematic.values.iter().map(|(n, _)| n.as_str()), manifest)?;
    check_names(FeatureFamily::Nonlinear, nonlinear.values.iter().map(|(n, _)| n.as_str()), manifest)?;
    if let Some(nm) = neuromotor {
        check_names(FeatureFamily::Neuromotor, nm.values.iter().map(|(n, _)| n.as_str()), manifest)?;
    }
    let mut values = vec![0.0; manifest.len()];
    let mut mask = vec![false; manifest.len()];
    let mut put = |name: &str, v: Option<f64>| -> Result<()> {
        let i = manifest.position(name).ok_or_else(|| Error::ManifestMismatch(format!("'{name}' not in manifest")))?;
        if let Some(v) = v {
            if !v.is_finite() {
                return Err(Error::NonFiniteFeature { row: 0, col: i });
            }
            values[i] = v;
            mask[i] = true;
        }
        Ok(())
    };
    for (n, v) in &kinematic.values {
        put(n, Some(*v))?;
    }
    for (n, v) in &nonlinear.values {
        put(n, *v)?;
    }
    if let Some(nm) = neuromotor {
        for (n, v) in &nm.values {
            put(n, Some(*v))?;
        }
    }
    Ok(FeatureVector { subject_id: rec.subject_id.clone(), group: rec.group, task: rec.task, values, mask })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub preprocess: PreprocessConfig,
    pub min_stroke_samples: usize,
    pub nonlinear: NonlinearConfig,
    pub sigma_lognormal: SigmaLognormalConfig,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            preprocess: PreprocessConfig::default(),
            min_stroke_samples: DEFAULT_MIN_STROKE_SAMPLES,
            nonlinear: NonlinearConfig::default(),
            sigma_lognormal: SigmaLognormalConfig::default(),
        }
    }
}

/// Full chain for one raw recording: resample and filter, segment, then
/// compute every family the manifest declares.
pub fn extract_task_features(raw: &TaskRecording, manifest: &FeatureManifest, config: &FeatureConfig) -> Result<FeatureVector> {
    let rec = preprocess(raw, &config.preprocess)?;
    let seg = segment_strokes(&rec, config.min_stroke_samples)?;
    let kin = global_kinematic_features(&rec, &seg.strokes, manifest)?;
    let nl = nonlinear_features(&rec, &seg.strokes, manifest, &config.nonlinear)?;
    let nm = if manifest.family_columns(FeatureFamily::Neuromotor).is_empty() {
        None
    } else {
        task_neuromotor_features(&rec, &seg.strokes, manifest, &config.sigma_lognormal)?
    };
    assemble_task_vector(&rec, &kin, &nl, nm.as_ref(), manifest)
}
