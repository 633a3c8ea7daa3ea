//! Rosenstein estimate of the largest Lyapunov exponent.

use rayon::prelude::*;

use super::embedding::PhasePoints;
use super::scaling::{fit_line, select_scaling_region, ScalingRule};
use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 1000;
pub const MAX_STEPS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovEstimate {
    /// Exponent in 1/s.
    pub lambda: f64,
    pub per_step: f64,
    /// Mean log divergence for k = 0..=steps.
    pub divergence: Vec<f64>,
    /// Whether a scaling region was found; otherwise the full curve was fitted.
    pub region_found: bool,
}

pub fn lyapunov_rule() -> ScalingRule {
    ScalingRule { slope_band: 0.10, ..ScalingRule::default() }
}

fn nearest_neighbors(points: &PhasePoints, theiler: usize, horizon: usize) -> Vec<Option<usize>> {
    let n = points.len();
    let usable = n.saturating_sub(horizon);
    (0..usable)
        .into_par_iter()
        .map(|i| {
            let mut best = f64::INFINITY;
            let mut best_j = None;
            for j in 0..usable {
                if i.abs_diff(j) <= theiler {
                    continue;
                }
                let d2 = points.dist2(i, j);
                if d2 > 0.0 && d2 < best {
                    best = d2;
                    best_j = Some(j);
                }
            }
            best_j
        })
        .collect()
}

pub fn largest_lyapunov(points: &PhasePoints, theiler: usize, sample_rate: f64) -> Result<LyapunovEstimate> {
    largest_lyapunov_with(points, theiler, sample_rate, MAX_STEPS, &lyapunov_rule())
}

pub fn largest_lyapunov_with(
    points: &PhasePoints,
    theiler: usize,
    sample_rate: f64,
    steps: usize,
    rule: &ScalingRule,
) -> Result<LyapunovEstimate> {
    let n = points.len();
    if n < MIN_POINTS {
        return Err(Error::TooFewPoints { len: n, min: MIN_POINTS });
    }
    if !(sample_rate > 0.0) {
        return Err(Error::InvalidRate(format!("{sample_rate}")));
    }
    let steps = steps.min(n / 4);
    // neighbours are restricted to points that can be followed for `steps` samples
    let nn = nearest_neighbors(points, theiler, steps);
    let mut sums = vec![0.0; steps + 1];
    let mut counts = vec![0usize; steps + 1];
    for (i, j) in nn.iter().enumerate() {
        let Some(j) = *j else { continue };
        for k in 0..=steps {
            let d2 = points.dist2(i + k, j + k);
            if d2 > 0.0 {
                sums[k] += 0.5 * d2.ln();
                counts[k] += 1;
            }
        }
    }
    if counts[0] == 0 {
        return Err(Error::SeriesDegenerate);
    }
    let divergence: Vec<f64> = sums.iter().zip(&counts).map(|(s, &c)| if c > 0 { s / c as f64 } else { f64::NAN }).collect();
    let valid = divergence.iter().take_while(|v| v.is_finite()).count();
    let x: Vec<f64> = (0..valid).map(|k| k as f64).collect();
    let y = &divergence[..valid];
    let (per_step, region_found) = match select_scaling_region(&x, y, rule) {
        Some(r) => (r.fit.slope, true),
        None => (fit_line(&x, y).slope, false),
    };
    Ok(LyapunovEstimate { lambda: per_step * sample_rate, per_step, divergence, region_found })
}
