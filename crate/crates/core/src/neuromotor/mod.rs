//! Sigma-Lognormal decomposition of stroke speed and the derived
//! neuromotor features.

pub mod extract;
pub mod lognormal;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use extract::{extract_sigma_lognormal, write_fit_dump, SigmaLognormalConfig, SigmaLognormalFit};
pub use lognormal::{reconstruct, LognormalComponent};

use crate::error::{Error, Result};
use crate::features::functionals::{mean, percentile_sorted, std_dev};
use crate::features::manifest::{FeatureFamily, FeatureManifest};
use crate::signal::{Stroke, TaskRecording};

/// Fit of one stroke together with the stroke's start time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrokeFit {
    pub start: f64,
    pub fit: SigmaLognormalFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuromotorFeatureSet {
    pub values: Vec<(String, f64)>,
}

impl NeuromotorFeatureSet {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    percentile_sorted(&s, 50.0)
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn min(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Statistics over all components of all strokes, keyed by the unprefixed
/// feature name.
pub fn neuromotor_statistics(fits: &[StrokeFit], pen_down_duration: f64) -> Result<Vec<(&'static str, f64)>> {
    if fits.is_empty() || fits.iter().all(|f| f.fit.components.is_empty()) {
        return Err(Error::EmptyFit);
    }
    let comps: Vec<(&StrokeFit, &LognormalComponent)> = fits.iter().flat_map(|f| f.fit.components.iter().map(move |c| (f, c))).collect();
    let counts: Vec<f64> = fits.iter().map(|f| f.fit.components.len() as f64).collect();
    let d: Vec<f64> = comps.iter().map(|(_, c)| c.d).collect();
    let offs: Vec<f64> = comps.iter().map(|(f, c)| c.t0 - f.start).collect();
    let mu: Vec<f64> = comps.iter().map(|(_, c)| c.mu).collect();
    let sigma: Vec<f64> = comps.iter().map(|(_, c)| c.sigma).collect();
    let peak: Vec<f64> = comps.iter().map(|(_, c)| c.peak_speed()).collect();
    let rise: Vec<f64> = comps.iter().map(|(_, c)| c.rise_time()).collect();
    let spacing: Vec<f64> =
        fits.iter().flat_map(|f| f.fit.components.windows(2).map(|w| w[1].t_peak() - w[0].t_peak()).collect::<Vec<_>>()).collect();
    let snr: Vec<f64> = fits.iter().map(|f| f.fit.reconstruction_snr_db).collect();
    let resid: Vec<f64> = fits.iter().map(|f| f.fit.residual_energy_ratio).collect();
    let attempts: usize = fits.iter().map(|f| f.fit.attempts).sum();
    let failures: usize = fits.iter().map(|f| f.fit.refine_failures).sum();
    let or0 = |v: &[f64], f: fn(&[f64]) -> f64| if v.is_empty() { 0.0 } else { f(v) };
    Ok(vec![
        ("count.mean", mean(&counts)),
        ("count.std", std_dev(&counts)),
        ("count.max", max(&counts)),
        ("D.mean", mean(&d)),
        ("D.std", std_dev(&d)),
        ("D.median", median(&d)),
        ("D.max", max(&d)),
        ("t0_offset.mean", mean(&offs)),
        ("t0_offset.std", std_dev(&offs)),
        ("mu.mean", mean(&mu)),
        ("mu.std", std_dev(&mu)),
        ("mu.median", median(&mu)),
        ("sigma.mean", mean(&sigma)),
        ("sigma.std", std_dev(&sigma)),
        ("sigma.median", median(&sigma)),
        ("sigma.max", max(&sigma)),
        ("tpeak_spacing.mean", or0(&spacing, mean)),
        ("tpeak_spacing.std", or0(&spacing, std_dev)),
        ("peak_speed.mean", mean(&peak)),
        ("peak_speed.std", std_dev(&peak)),
        ("rise_time.mean", mean(&rise)),
        ("rise_time.std", std_dev(&rise)),
        ("snr.mean", mean(&snr)),
        ("snr.std", std_dev(&snr)),
        ("snr.min", min(&snr)),
        ("residual_ratio.mean", mean(&resid)),
        ("lognormals_per_s", if pen_down_duration > 0.0 { comps.len() as f64 / pen_down_duration } else { 0.0 }),
        ("refine_fail_rate", if attempts > 0 { failures as f64 / attempts as f64 } else { 0.0 }),
    ])
}

/// Features from already computed stroke fits, in manifest order.
pub fn neuromotor_features(fits: &[StrokeFit], pen_down_duration: f64, manifest: &FeatureManifest) -> Result<NeuromotorFeatureSet> {
    let stats = neuromotor_statistics(fits, pen_down_duration)?;
    let values = manifest
        .family_names(FeatureFamily::Neuromotor)
        .into_iter()
        .map(|name| {
            let key = name.strip_prefix("nm.").unwrap_or(name);
            match stats.iter().find(|(k, _)| *k == key) {
                Some((_, v)) if v.is_finite() => Ok((name.to_string(), *v)),
                Some(_) => Err(Error::NonFiniteFeature { row: 0, col: manifest.position(name).unwrap_or(0) }),
                None => Err(Error::ManifestMismatch(format!("neuromotor feature '{name}' is not computable"))),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NeuromotorFeatureSet { values })
}

/// Fits every stroke independently; strokes without a usable peak are
/// skipped.
pub fn fit_strokes(strokes: &[Stroke], config: &SigmaLognormalConfig) -> Vec<StrokeFit> {
    strokes
        .par_iter()
        .map(|s| {
            let times = s.times();
            match extract_sigma_lognormal(&times, s.speed(), config) {
                Ok(fit) => Some(StrokeFit { start: times[0], fit }),
                Err(e) => {
                    log::debug!("stroke {}: {e}", s.index);
                    None
                }
            }
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Neuromotor block of one task; `None` for tasks on the skip list or when
/// no stroke could be fitted.
pub fn task_neuromotor_features(
    rec: &TaskRecording,
    strokes: &[Stroke],
    manifest: &FeatureManifest,
    config: &SigmaLognormalConfig,
) -> Result<Option<NeuromotorFeatureSet>> {
    if rec.task.skips_neuromotor() {
        return Ok(None);
    }
    let fits = fit_strokes(strokes, config);
    let pen_down: f64 = strokes.iter().map(|s| s.duration()).sum();
    match neuromotor_features(&fits, pen_down, manifest) {
        Ok(f) => Ok(Some(f)),
        Err(Error::EmptyFit) => {
            log::debug!("{} {}: no stroke could be fitted", rec.subject_id, rec.task);
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{segment_strokes, Group, PenSample, TaskId};

    fn fit_of(comps: Vec<LognormalComponent>) -> SigmaLognormalFit {
        let n = comps.len();
        SigmaLognormalFit {
            components: comps,
            snr_after: vec![30.0; n],
            snr_trace: vec![30.0; n],
            reconstruction_snr_db: 30.0,
            residual_energy_ratio: 1e-3,
            attempts: n,
            refine_failures: 0,
        }
    }

    fn comp(d: f64, t0: f64) -> LognormalComponent {
        LognormalComponent::new(d, t0, -1.5, 0.3).unwrap()
    }

    #[test]
    fn single_component_stats() {
        let c = comp(10.0, 0.1);
        let fits = vec![StrokeFit { start: 0.0, fit: fit_of(vec![c]) }];
        let f = neuromotor_features(&fits, 2.0, &FeatureManifest::default()).unwrap();
        assert_eq!(f.values.len(), 28);
        assert_eq!(f.get("nm.D.mean"), Some(10.0));
        assert_eq!(f.get("nm.mu.mean"), Some(-1.5));
        assert_eq!(f.get("nm.sigma.mean"), Some(0.3));
        assert_eq!(f.get("nm.t0_offset.mean"), Some(0.1));
        for k in ["nm.D.std", "nm.mu.std", "nm.sigma.std", "nm.count.std", "nm.tpeak_spacing.std"] {
            assert_eq!(f.get(k), Some(0.0), "{k}");
        }
        assert_eq!(f.get("nm.lognormals_per_s"), Some(0.5));
    }

    #[test]
    fn counts_over_strokes() {
        let fits = vec![
            StrokeFit { start: 0.0, fit: fit_of(vec![comp(1.0, 0.0), comp(2.0, 0.3)]) },
            StrokeFit { start: 2.0, fit: fit_of((0..4).map(|i| comp(1.0, 2.0 + 0.3 * i as f64)).collect()) },
        ];
        let f = neuromotor_features(&fits, 3.0, &FeatureManifest::default()).unwrap();
        assert_eq!(f.get("nm.count.mean"), Some(3.0));
        assert_eq!(f.get("nm.count.max"), Some(4.0));
        assert_eq!(f.get("nm.count.std"), Some(1.0));
        assert!((f.get("nm.tpeak_spacing.mean").unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn empty_is_error() {
        assert_eq!(neuromotor_features(&[], 1.0, &FeatureManifest::default()).unwrap_err(), Error::EmptyFit);
    }

    #[test]
    fn skip_list_task_is_absent() {
        let samples: Vec<PenSample> =
            (0..200).map(|i| PenSample::down(i as f64 / 180.0, (i as f64 * 0.05).sin() * 10.0, i as f64 * 0.1, 0.5)).collect();
        let rec = TaskRecording::new("s", Group::PD, TaskId::Rey, 180.0, samples).unwrap();
        let seg = segment_strokes(&rec, 10).unwrap();
        let out = task_neuromotor_features(&rec, &seg.strokes, &FeatureManifest::default(), &SigmaLognormalConfig::default());
        assert_eq!(out.unwrap(), None);
    }
}
