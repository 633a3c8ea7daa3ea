//! Global (task-level) and per-stroke kinematic features.

use std::collections::HashMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::functionals::{functionals, mean, std_dev, FUNCTIONAL_NAMES, RANGE_FUNCTIONAL};
use crate::features::manifest::{FeatureFamily, FeatureManifest};
use crate::signal::{Stroke, TaskRecording};

/// Speed maxima must rise at least this fraction of the maximum speed above
/// their surroundings to count.
pub const PEAK_PROMINENCE_FRACTION: f64 = 0.05;

pub const DIRECTION_SECTORS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureScope {
    PerTask,
    PerStroke,
}

/// Ordered feature values (names carry the `kin.` prefix).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinematicFeatureSet {
    pub scope: FeatureScope,
    pub values: Vec<(String, f64)>,
}

impl KinematicFeatureSet {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Scalar summary of one stroke, ready for functional aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrokeKinematics {
    pub duration: f64,
    pub path_length: f64,
    pub speed_mean: f64,
    pub speed_max: f64,
    pub accel_mean: f64,
    pub speed_peaks: f64,
    pub pressure_mean: f64,
    pub net_to_path: f64,
}

impl StrokeKinematics {
    pub const NAMES: [&'static str; 8] =
        ["duration", "path_length", "speed_mean", "speed_max", "accel_mean", "speed_peaks", "pressure_mean", "net_to_path"];

    pub fn values(&self) -> [f64; 8] {
        [
            self.duration,
            self.path_length,
            self.speed_mean,
            self.speed_max,
            self.accel_mean,
            self.speed_peaks,
            self.pressure_mean,
            self.net_to_path,
        ]
    }
}

/// Number of local maxima whose topographic prominence is at least
/// `min_prominence`. Plateaus count once.
pub fn count_prominent_peaks(signal: &[f64], min_prominence: f64) -> usize {
    let n = signal.len();
    if n == 0 {
        return 0;
    }
    let mut count = 0;
    let mut i = 0;
    while i < n {
        // extent of a plateau starting at i
        let mut j = i;
        while j + 1 < n && signal[j + 1] == signal[i] {
            j += 1;
        }
        let rises_left = i == 0 || signal[i - 1] < signal[i];
        let falls_right = j == n - 1 || signal[j + 1] < signal[i];
        let interior = i > 0 || j < n - 1;
        if rises_left && falls_right && interior {
            let h = signal[i];
            let mut left_min = h;
            let mut k = i;
            while k > 0 {
                k -= 1;
                // an equal maximum to the left claims the shared base
                if signal[k] >= h {
                    break;
                }
                left_min = left_min.min(signal[k]);
            }
            let mut right_min = h;
            let mut k = j;
            while k + 1 < n {
                k += 1;
                if signal[k] > h {
                    break;
                }
                right_min = right_min.min(signal[k]);
            }
            if h - left_min.max(right_min) >= min_prominence {
                count += 1;
            }
        }
        i = j + 1;
    }
    count
}

fn path_length_of(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2).zip(ys.windows(2)).map(|(x, y)| (x[1] - x[0]).hypot(y[1] - y[0])).sum()
}

fn speed_peak_count(speed: &[f64]) -> usize {
    let max = speed.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return 0;
    }
    count_prominent_peaks(speed, PEAK_PROMINENCE_FRACTION * max)
}

pub fn stroke_kinematic_series(stroke: &Stroke) -> Result<StrokeKinematics> {
    if stroke.len() < crate::signal::kinematics::MIN_DERIVATIVE_SAMPLES {
        return Err(Error::TooShort { len: stroke.len(), min: crate::signal::kinematics::MIN_DERIVATIVE_SAMPLES });
    }
    let xs = stroke.xs();
    let ys = stroke.ys();
    let path_length = path_length_of(&xs, &ys);
    let net = (xs[xs.len() - 1] - xs[0]).hypot(ys[ys.len() - 1] - ys[0]);
    let speed = stroke.speed();
    Ok(StrokeKinematics {
        duration: stroke.duration(),
        path_length,
        speed_mean: mean(speed),
        speed_max: speed.iter().cloned().fold(0.0, f64::max),
        accel_mean: mean(&stroke.profiles.accel),
        speed_peaks: speed_peak_count(speed) as f64,
        pressure_mean: mean(&stroke.pressures()),
        net_to_path: if path_length > 0.0 { net / path_length } else { 0.0 },
    })
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().cloned().fold(f64::NEG_INFINITY, f64::max).max(0.0)
}

/// Shannon entropy (bits) of heading over equal sectors, weighted by arc length.
pub fn direction_entropy(angles: &[f64], weights: &[f64], sectors: usize) -> f64 {
    let mut hist = vec![0.0; sectors];
    for (a, w) in angles.iter().zip(weights) {
        let a = a.rem_euclid(TAU);
        let bin = ((a / TAU * sectors as f64) as usize).min(sectors - 1);
        hist[bin] += w;
    }
    let total: f64 = hist.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    -hist.iter().filter(|&&h| h > 0.0).map(|h| h / total).map(|p| p * p.log2()).sum::<f64>()
}

/// Every kinematic quantity this module can produce, keyed by manifest name.
fn catalogue(rec: &TaskRecording, strokes: &[Stroke]) -> Result<HashMap<String, f64>> {
    if strokes.is_empty() {
        return Err(Error::NoStrokes);
    }
    let dt = 1.0 / rec.sample_rate_hz;
    let per_stroke: Vec<StrokeKinematics> = strokes.iter().map(stroke_kinematic_series).collect::<Result<_>>()?;

    let cat = |f: fn(&Stroke) -> Vec<f64>| -> Vec<f64> { strokes.iter().flat_map(f).collect() };
    let speed = cat(|s| s.profiles.speed.clone());
    let accel = cat(|s| s.profiles.accel.clone());
    let jerk = cat(|s| s.profiles.jerk.clone());
    let pressure = cat(|s| s.pressures());
    let curvature: Vec<f64> = cat(|s| s.profiles.curvature.iter().map(|c| c.abs()).collect());
    let xs = cat(|s| s.xs());
    let ys = cat(|s| s.ys());

    let total_duration = rec.duration();
    let pen_down_duration: f64 = per_stroke.iter().map(|s| s.duration).sum();
    let path_length: f64 = per_stroke.iter().map(|s| s.path_length).sum();
    let pen_up_duration = (total_duration - pen_down_duration).max(0.0);
    let gaps: Vec<f64> = strokes.windows(2).map(|w| w[1].samples[0].t - w[0].samples[w[0].len() - 1].t).collect();
    let peaks: f64 = per_stroke.iter().map(|s| s.speed_peaks).sum();

    let (min_x, max_x) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let (min_y, max_y) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let width = max_x - min_x;
    let height = max_y - min_y;

    let mut adjacent = Vec::new();
    for s in strokes {
        let (sx, sy) = (s.xs(), s.ys());
        adjacent.extend(sx.windows(2).zip(sy.windows(2)).map(|(x, y)| (x[1] - x[0]).hypot(y[1] - y[0])));
    }
    let angles = cat(|s| s.profiles.path_angle.clone());
    let arc: Vec<f64> = speed.iter().map(|v| v * dt).collect();

    let first = &strokes[0].samples[0];
    let last_stroke = &strokes[strokes.len() - 1];
    let last = &last_stroke.samples[last_stroke.len() - 1];
    let net = (last.x - first.x).hypot(last.y - first.y);
    let speed_mean = mean(&speed);

    let mut out = HashMap::new();
    let mut put = |k: &str, v: f64| {
        out.insert(format!("kin.{k}"), v);
    };
    put("total_duration", total_duration);
    put("pen_down_duration", pen_down_duration);
    put("pen_down_ratio", if total_duration > 0.0 { pen_down_duration / total_duration } else { 1.0 });
    put("stroke_count", strokes.len() as f64);
    put("path_length", path_length);
    put("speed_mean", speed_mean);
    put("speed_max", max_of(&speed));
    put("speed_std", std_dev(&speed));
    put("accel_mean", mean(&accel));
    put("accel_max", max_of(&accel));
    put("accel_std", std_dev(&accel));
    put("jerk_mean", mean(&jerk));
    put("jerk_max", max_of(&jerk));
    put("jerk_std", std_dev(&jerk));
    put("pressure_mean", mean(&pressure));
    put("pressure_std", std_dev(&pressure));
    put("speed_peaks_per_s", if pen_down_duration > 0.0 { peaks / pen_down_duration } else { 0.0 });
    put("curvature_mean", mean(&curvature));
    put("curvature_std", std_dev(&curvature));
    put("box_width", width);
    put("box_height", height);
    put("aspect_ratio", width / height.max(1e-6 * width.max(1e-9)));
    put("stroke_duration_mean", pen_down_duration / strokes.len() as f64);
    put("pen_up_duration", pen_up_duration);
    put("direction_entropy", direction_entropy(&angles, &arc, DIRECTION_SECTORS));
    put("adjacent_distance_mean", mean(&adjacent));
    put("adjacent_distance_max", max_of(&adjacent));
    put("speed_cv", if speed_mean > 0.0 { std_dev(&speed) / speed_mean } else { 0.0 });
    put("pen_up_duration_mean", if gaps.is_empty() { 0.0 } else { mean(&gaps) });
    put("net_to_path_ratio", if path_length > 0.0 { net / path_length } else { 0.0 });

    for (qi, q) in StrokeKinematics::NAMES.iter().enumerate() {
        let series: Vec<f64> = per_stroke.iter().map(|s| s.values()[qi]).collect();
        let f = functionals(&series)?;
        for (fname, v) in FUNCTIONAL_NAMES.iter().zip(f.values()) {
            out.insert(format!("kin.stroke.{q}.{fname}"), v);
        }
        out.insert(format!("kin.stroke.{q}.{RANGE_FUNCTIONAL}"), f.range());
    }
    Ok(out)
}

/// Task-level kinematic features laid out in manifest order.
pub fn global_kinematic_features(rec: &TaskRecording, strokes: &[Stroke], manifest: &FeatureManifest) -> Result<KinematicFeatureSet> {
    let cat = catalogue(rec, strokes)?;
    let values = manifest
        .family_names(FeatureFamily::Kinematic)
        .into_iter()
        .map(|name| match cat.get(name) {
            Some(v) if v.is_finite() => Ok((name.to_string(), *v)),
            Some(_) => Err(Error::NonFiniteFeature { row: 0, col: manifest.position(name).unwrap_or(0) }),
            None => Err(Error::ManifestMismatch(format!("kinematic feature '{name}' is not computable"))),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KinematicFeatureSet { scope: FeatureScope::PerTask, values })
}
