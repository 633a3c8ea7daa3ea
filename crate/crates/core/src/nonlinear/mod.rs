//! Phase-space reconstruction and the nonlinear-dynamics feature battery.
//!
//! Each estimator can fail on a given series (too short, degenerate, no
//! scaling region). The battery records such failures as absent values
//! rather than aborting the task.

pub mod correlation;
pub mod embedding;
pub mod emd;
pub mod entropy;
pub mod hurst;
pub mod lyapunov;
pub mod lz;
pub mod scaling;
pub mod snr;
#[cfg(test)]
pub(crate) mod testutil;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use correlation::{correlation_dimension, CorrelationDimension};
pub use embedding::{embed, embed_delay, select_embedding, EmbeddingParams, PhasePoints};
pub use emd::{decompose, emd_features, Decomposition, EmdFeatures};
pub use entropy::entropy;
pub use hurst::hurst_rs;
pub use lyapunov::{largest_lyapunov, LyapunovEstimate};
pub use lz::lempel_ziv;
pub use scaling::{ScalingRegion, ScalingRule};
pub use snr::{energy_snr, teager, SnrPair};

use crate::error::{Error, Result};
use crate::features::manifest::{FeatureFamily, FeatureManifest, NONLINEAR_MEASURES};
use crate::signal::{Stroke, TaskRecording};

pub const HURST_RANGE: (f64, f64) = (0.0, 1.2);
pub const LZ_RANGE: (f64, f64) = (0.0, 1.5);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearConfig {
    /// Longest stretch (central window) fed to the quadratic-cost
    /// estimators: embedding selection, D2 and λ.
    pub max_phase_len: usize,
    pub entropy_bins: usize,
}

impl Default for NonlinearConfig {
    fn default() -> Self {
        Self { max_phase_len: 2048, entropy_bins: entropy::DEFAULT_BINS }
    }
}

/// Ordered `nl.` values; `None` marks an estimator that could not run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearFeatureSet {
    pub values: Vec<(String, Option<f64>)>,
}

impl NonlinearFeatureSet {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(n, _)| n == name).and_then(|(_, v)| *v)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn absent_count(&self) -> usize {
        self.values.iter().filter(|(_, v)| v.is_none()).count()
    }
}

fn central(series: &[f64], max: usize) -> &[f64] {
    if series.len() <= max {
        return series;
    }
    let start = (series.len() - max) / 2;
    &series[start..start + max]
}

fn keep(name: &str, r: Result<f64>) -> Option<f64> {
    match r {
        Ok(v) if v.is_finite() => Some(v),
        Ok(v) => {
            log::debug!("{name}: non-finite value {v}");
            None
        }
        Err(e) => {
            log::debug!("{name}: {e}");
            None
        }
    }
}

/// All twelve measures for one series, keyed by measure name.
pub fn series_measures(series: &[f64], sample_rate: f64, config: &NonlinearConfig) -> HashMap<&'static str, Option<f64>> {
    let mut out: HashMap<&'static str, Option<f64>> = HashMap::new();
    let window = central(series, config.max_phase_len);
    let embedded = select_embedding(window).and_then(|p| Ok((p, embed(window, &p)?)));
    match embedded {
        Ok((params, points)) => {
            out.insert("d2", keep("d2", correlation_dimension(&points, params.theiler_window).map(|d| d.d2)));
            out.insert("lambda_max", keep("lambda_max", largest_lyapunov(&points, params.theiler_window, sample_rate).map(|l| l.lambda)));
        }
        Err(e) => {
            log::debug!("embedding: {e}");
            out.insert("d2", None);
            out.insert("lambda_max", None);
        }
    }
    out.insert("hurst", keep("hurst", hurst_rs(series)).map(|h| h.clamp(HURST_RANGE.0, HURST_RANGE.1)));
    out.insert("lz_norm", keep("lz_norm", lempel_ziv(series)).map(|v| v.clamp(LZ_RANGE.0, LZ_RANGE.1)));
    for (name, order) in [("shannon_bits", 1), ("renyi2_bits", 2), ("renyi3_bits", 3)] {
        out.insert(name, keep(name, entropy(series, order, config.entropy_bins)));
    }
    match energy_snr(series, sample_rate) {
        Ok(s) => {
            out.insert("snr_conventional_db", keep("snr", Ok(s.conventional_db)));
            out.insert("snr_teager_db", keep("snr_teager", Ok(s.teager_db)));
        }
        Err(e) => {
            log::debug!("snr: {e}");
            out.insert("snr_conventional_db", None);
            out.insert("snr_teager_db", None);
        }
    }
    match emd_features(series, sample_rate) {
        Ok(f) => {
            out.insert("imf_count", Some(f.imf_count as f64));
            out.insert("imf1_energy_ratio", keep("imf1_energy_ratio", Ok(f.imf1_energy_ratio)));
            out.insert("imf1_mean_freq", keep("imf1_mean_freq", Ok(f.imf1_mean_freq)));
        }
        Err(e) => {
            log::debug!("emd: {e}");
            for k in ["imf_count", "imf1_energy_ratio", "imf1_mean_freq"] {
                out.insert(k, None);
            }
        }
    }
    debug_assert_eq!(out.len(), NONLINEAR_MEASURES.len());
    out
}

/// Concatenated pen-down series of the named kind.
pub fn pen_down_series(strokes: &[Stroke], series: &str) -> Option<Vec<f64>> {
    let mut out = Vec::new();
    for s in strokes {
        match series {
            "speed" => out.extend_from_slice(s.speed()),
            "pressure" => out.extend(s.pressures()),
            "x" => out.extend(s.xs()),
            "y" => out.extend(s.ys()),
            _ => return None,
        }
    }
    Some(out)
}

/// Nonlinear features of one task in manifest order.
pub fn nonlinear_features(
    rec: &TaskRecording,
    strokes: &[Stroke],
    manifest: &FeatureManifest,
    config: &NonlinearConfig,
) -> Result<NonlinearFeatureSet> {
    let mut cache: HashMap<String, HashMap<&'static str, Option<f64>>> = HashMap::new();
    let mut values = Vec::new();
    for name in manifest.family_names(FeatureFamily::Nonlinear) {
        let mismatch = || Error::ManifestMismatch(format!("nonlinear feature '{name}' is not computable"));
        let rest = name.strip_prefix("nl.").ok_or_else(mismatch)?;
        let (series, measure) = rest.split_once('.').ok_or_else(mismatch)?;
        if !cache.contains_key(series) {
            let data = pen_down_series(strokes, series).ok_or_else(mismatch)?;
            cache.insert(series.to_string(), series_measures(&data, rec.sample_rate_hz, config));
        }
        let v = *cache[series].get(measure).ok_or_else(mismatch)?;
        values.push((name.to_string(), v));
    }
    Ok(NonlinearFeatureSet { values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{segment_strokes, Group, PenSample, TaskId};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scribble(seed: u64, n: usize) -> TaskRecording {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut x, mut y, mut a) = (0.0, 0.0, 0.0f64);
        let samples = (0..n)
            .map(|i| {
                let t = i as f64 / 180.0;
                a += 0.08 + 0.05 * rng.gen::<f64>();
                let v = 30.0 + 10.0 * (2.0 * std::f64::consts::PI * 1.3 * t).sin() + rng.gen::<f64>();
                x += v * a.cos() / 180.0;
                y += v * a.sin() / 180.0;
                PenSample::down(t, x, y, 0.4 + 0.2 * (3.0 * t).sin().abs() + 0.01 * rng.gen::<f64>())
            })
            .collect();
        TaskRecording::new("s", Group::PD, TaskId::Spiral, 180.0, samples).unwrap()
    }

    #[test]
    fn battery_fills_manifest_order() {
        let rec = scribble(1, 1400);
        let seg = segment_strokes(&rec, 10).unwrap();
        let m = FeatureManifest::default();
        let f = nonlinear_features(&rec, &seg.strokes, &m, &NonlinearConfig::default()).unwrap();
        let names: Vec<&str> = f.values.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, m.family_names(FeatureFamily::Nonlinear));
        assert_eq!(f.len(), 48);
        for (n, v) in &f.values {
            if let Some(v) = v {
                assert!(v.is_finite(), "{n}");
            }
        }
        let h = f.get("nl.speed.hurst").unwrap();
        assert!((HURST_RANGE.0..=HURST_RANGE.1).contains(&h));
        assert!(f.get("nl.speed.shannon_bits").unwrap() > 0.0);
        assert!(f.get("nl.x.d2").is_some());
    }

    #[test]
    fn short_task_marks_absent() {
        let rec = scribble(2, 200);
        let seg = segment_strokes(&rec, 10).unwrap();
        let f = nonlinear_features(&rec, &seg.strokes, &FeatureManifest::default(), &NonlinearConfig::default()).unwrap();
        assert!(f.get("nl.speed.d2").is_none());
        assert!(f.get("nl.speed.lambda_max").is_none());
        assert!(f.get("nl.speed.shannon_bits").is_some());
    }

    fn noisy_orbit(seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = 0.2 + 0.6 * rng.gen::<f64>();
        (0..1200)
            .map(|_| {
                x = 3.9 * x * (1.0 - x);
                x
            })
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(6))]
        #[test]
        fn d2_and_lambda_affine_invariant(seed in 0u64..1000, a in 0.01f64..100.0, b in -100f64..100.0) {
            let s = noisy_orbit(seed);
            let t: Vec<f64> = s.iter().map(|v| a * v + b).collect();
            let (ps, pt) = (embed_delay(&s, 1, 2).unwrap(), embed_delay(&t, 1, 2).unwrap());
            let (ds, dt) = (correlation_dimension(&ps, 1).unwrap().d2, correlation_dimension(&pt, 1).unwrap().d2);
            prop_assert!((ds - dt).abs() < 1e-6, "{} {}", ds, dt);
            let (ls, lt) = (largest_lyapunov(&ps, 1, 1.0).unwrap().lambda, largest_lyapunov(&pt, 1, 1.0).unwrap().lambda);
            prop_assert!((ls - lt).abs() < 1e-6, "{} {}", ls, lt);
        }
    }
}
