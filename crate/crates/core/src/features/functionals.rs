use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Names of the ten statistical functionals, in manifest order.
pub const FUNCTIONAL_NAMES: [&str; 10] = ["mean", "median", "std", "pct1", "pct99", "pct_range", "max", "min", "kurtosis", "skewness"];

/// Optional eleventh functional (`max - min`).
pub const RANGE_FUNCTIONAL: &str = "range";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSet {
    pub mean: f64,
    pub median: f64,
    /// Population standard deviation.
    pub std: f64,
    pub pct1: f64,
    pub pct99: f64,
    pub pct_range: f64,
    pub max: f64,
    pub min: f64,
    /// Excess kurtosis.
    pub kurtosis: f64,
    pub skewness: f64,
}

impl FunctionalSet {
    pub fn values(&self) -> [f64; 10] {
        [self.mean, self.median, self.std, self.pct1, self.pct99, self.pct_range, self.max, self.min, self.kurtosis, self.skewness]
    }

    pub fn range(&self) -> f64 {
        self.max - self.min
    }

    /// Values followed by `range` when `with_range` is set.
    pub fn values_with(&self, with_range: bool) -> Vec<f64> {
        let mut v = self.values().to_vec();
        if with_range {
            v.push(self.range());
        }
        v
    }
}

/// Percentile of already sorted values, linear interpolation between order
/// statistics.
pub fn percentile_sorted(sorted: &[f64], pct: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = (pct / 100.0).clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let w = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * w
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation.
pub fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64).sqrt()
}

pub fn functionals(values: &[f64]) -> Result<FunctionalSet> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    // sum over the sorted copy so the result does not depend on input order
    let mean = sorted.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in &sorted {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let std = m2.sqrt();
    let scale = mean.abs().max(1.0);
    let (skewness, kurtosis) = if std <= 1e-12 * scale { (0.0, 0.0) } else { (m3 / (m2 * std), m4 / (m2 * m2) - 3.0) };
    let pct1 = percentile_sorted(&sorted, 1.0);
    let pct99 = percentile_sorted(&sorted, 99.0);
    Ok(FunctionalSet {
        mean,
        median: percentile_sorted(&sorted, 50.0),
        std: if std <= 1e-12 * scale { 0.0 } else { std },
        pct1,
        pct99,
        pct_range: pct99 - pct1,
        max: sorted[sorted.len() - 1],
        min: sorted[0],
        kurtosis,
        skewness,
    })
}
