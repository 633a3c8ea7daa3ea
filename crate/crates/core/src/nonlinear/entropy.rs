use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 64;
pub const MIN_ENTROPY_LEN: usize = 100;

/// Bin index of every sample for `bins` equal-width bins spanning
/// [min, max]. A constant series lands entirely in bin 0.
pub fn histogram_bins(series: &[f64], bins: usize) -> Vec<usize> {
    let (lo, hi) = series.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let width = hi - lo;
    series.iter().map(|&v| if width > 0.0 { (((v - lo) / width * bins as f64) as usize).min(bins - 1) } else { 0 }).collect()
}

pub fn histogram_probabilities(series: &[f64], bins: usize) -> Vec<f64> {
    let mut counts = vec![0usize; bins];
    for b in histogram_bins(series, bins) {
        counts[b] += 1;
    }
    let n = series.len() as f64;
    counts.into_iter().filter(|&c| c > 0).map(|c| c as f64 / n).collect()
}

/// Shannon (order 1) or Rényi entropy in bits of a probability vector.
pub fn entropy_of(probs: &[f64], order: u32) -> f64 {
    let h = if order == 1 {
        -probs.iter().filter(|&&p| p > 0.0).map(|p| p * p.log2()).sum::<f64>()
    } else {
        let a = order as f64;
        probs.iter().map(|p| p.powf(a)).sum::<f64>().log2() / (1.0 - a)
    };
    // -0.0 and tiny negatives from rounding on a single bin
    h.max(0.0)
}

pub fn entropy(series: &[f64], order: u32, bins: usize) -> Result<f64> {
    if series.len() < MIN_ENTROPY_LEN {
        return Err(Error::SeriesTooShort { len: series.len(), min: MIN_ENTROPY_LEN });
    }
    if bins < 2 || !(1..=3).contains(&order) {
        return Err(Error::InvalidParams(format!("order={order}, bins={bins}")));
    }
    Ok(entropy_of(&histogram_probabilities(series, bins), order))
}
