//! Grassberger–Procaccia correlation dimension.

use rayon::prelude::*;

use super::embedding::PhasePoints;
use super::scaling::{select_scaling_region, ScalingRegion, ScalingRule};
use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 500;
pub const RADIUS_COUNT: usize = 20;
/// Pair distances used to place the radii are subsampled beyond this count.
const MAX_DISTANCE_SAMPLE: usize = 250_000;
const ROW_BLOCK: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationDimension {
    pub d2: f64,
    pub radii: Vec<f64>,
    /// Correlation sum C(r) at each radius.
    pub sums: Vec<f64>,
    pub region: ScalingRegion,
}

fn pair_total(n: usize, theiler: usize) -> u64 {
    // pairs (i, j) with j - i > theiler
    if n <= theiler + 1 {
        return 0;
    }
    let k = (n - theiler - 1) as u64;
    k * (k + 1) / 2
}

/// Pair distances (i < j, j - i > theiler), strided so at most about
/// `MAX_DISTANCE_SAMPLE` are kept.
fn sample_distances(points: &PhasePoints, theiler: usize) -> Vec<f64> {
    let n = points.len();
    let total = pair_total(n, theiler);
    let stride = total.div_ceil(MAX_DISTANCE_SAMPLE as u64).max(1) as usize;
    let mut out = Vec::with_capacity((total as usize / stride) + 1);
    let mut offset = 0usize;
    for i in 0..n {
        let j0 = i + theiler + 1;
        if j0 >= n {
            break;
        }
        let row_len = n - j0;
        let first = (stride - offset % stride) % stride;
        let mut j = j0 + first;
        while j < n {
            out.push(points.dist2(i, j).sqrt());
            j += stride;
        }
        offset += row_len;
    }
    out
}

/// Midpoint of the order statistics around quantile `q`, so the radius
/// does not coincide with a sampled distance.
fn between_order_stats(dist: &mut [f64], q: f64) -> f64 {
    let n = dist.len();
    if n < 2 {
        return dist.first().copied().unwrap_or(0.0);
    }
    let k = ((q * (n - 1) as f64).floor() as usize).min(n - 2);
    let (_, a, rest) = dist.select_nth_unstable_by(k, f64::total_cmp);
    let a = *a;
    let b = rest.iter().copied().fold(f64::INFINITY, f64::min);
    0.5 * (a + b)
}

/// Number of pairs closer than each radius (`radii` ascending), excluding
/// pairs within `theiler` samples in time. Exact integer counts, so the
/// result does not depend on how rows are scheduled.
pub fn correlation_counts(points: &PhasePoints, theiler: usize, radii: &[f64]) -> Vec<u64> {
    let n = points.len();
    let r2: Vec<f64> = radii.iter().map(|r| r * r).collect();
    let r2_max = *r2.last().unwrap_or(&0.0);
    let blocks: Vec<usize> = (0..n).step_by(ROW_BLOCK).collect();
    let bins = blocks
        .par_iter()
        .map(|&b| {
            let mut local = vec![0u64; r2.len()];
            for i in b..(b + ROW_BLOCK).min(n) {
                for j in (i + theiler + 1)..n {
                    let d2 = points.dist2(i, j);
                    if d2 >= r2_max {
                        continue;
                    }
                    // first radius strictly greater than the distance
                    let k = r2.partition_point(|&r| r <= d2);
                    local[k] += 1;
                }
            }
            local
        })
        .reduce(
            || vec![0u64; r2.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let mut acc = 0u64;
    bins.into_iter()
        .map(|c| {
            acc += c;
            acc
        })
        .collect()
}

pub fn correlation_dimension(points: &PhasePoints, theiler: usize) -> Result<CorrelationDimension> {
    correlation_dimension_with(points, theiler, &ScalingRule::default())
}

pub fn correlation_dimension_with(points: &PhasePoints, theiler: usize, rule: &ScalingRule) -> Result<CorrelationDimension> {
    let n = points.len();
    if n < MIN_POINTS {
        return Err(Error::TooFewPoints { len: n, min: MIN_POINTS });
    }
    let total = pair_total(n, theiler);
    if total == 0 {
        return Err(Error::TooFewPoints { len: n, min: theiler + 2 });
    }
    let mut dist = sample_distances(points, theiler);
    let mut lo = between_order_stats(&mut dist, 0.01);
    let hi = between_order_stats(&mut dist, 0.5);
    if lo <= 0.0 {
        lo = dist.iter().copied().filter(|&d| d > 0.0).fold(f64::INFINITY, f64::min);
    }
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::NoScalingRegion);
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    let radii: Vec<f64> = (0..RADIUS_COUNT).map(|k| (llo + (lhi - llo) * k as f64 / (RADIUS_COUNT - 1) as f64).exp()).collect();
    let counts = correlation_counts(points, theiler, &radii);
    let sums: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
    let first = counts.iter().position(|&c| c > 0).ok_or(Error::NoScalingRegion)?;
    let x: Vec<f64> = radii[first..].iter().map(|r| r.ln()).collect();
    let y: Vec<f64> = sums[first..].iter().map(|c| c.ln()).collect();
    let region = select_scaling_region(&x, &y, rule).ok_or(Error::NoScalingRegion)?;
    let region = ScalingRegion { start: region.start + first, ..region };
    Ok(CorrelationDimension { d2: region.fit.slope, radii, sums, region })
}
