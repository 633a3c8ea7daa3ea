use super::scaling::fit_line;
use crate::error::{Error, Result};

pub const MIN_HURST_LEN: usize = 512;
pub const MIN_WINDOW: usize = 16;
pub const WINDOW_SIZES: usize = 12;

/// Log-spaced window sizes from 16 to N/4, deduplicated.
pub fn window_sizes(n: usize) -> Vec<usize> {
    let (lo, hi) = ((MIN_WINDOW as f64).ln(), ((n / 4) as f64).ln());
    let mut out: Vec<usize> =
        (0..WINDOW_SIZES).map(|k| (lo + (hi - lo) * k as f64 / (WINDOW_SIZES - 1) as f64).exp().round() as usize).collect();
    out.dedup();
    out
}

/// Mean rescaled range over non-overlapping windows of `size`; windows
/// with zero spread are skipped.
pub fn mean_rescaled_range(series: &[f64], size: usize) -> Option<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for w in series.chunks_exact(size) {
        let m = w.iter().sum::<f64>() / size as f64;
        let s = (w.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / size as f64).sqrt();
        if s <= 0.0 {
            continue;
        }
        let (mut y, mut lo, mut hi) = (0.0f64, 0.0f64, 0.0f64);
        for v in w {
            y += v - m;
            lo = lo.min(y);
            hi = hi.max(y);
        }
        total += (hi - lo) / s;
        count += 1;
    }
    (count > 0).then(|| total / count as f64)
}

pub fn hurst_rs(series: &[f64]) -> Result<f64> {
    if series.len() < MIN_HURST_LEN {
        return Err(Error::SeriesTooShort { len: series.len(), min: MIN_HURST_LEN });
    }
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for size in window_sizes(series.len()) {
        if let Some(rs) = mean_rescaled_range(series, size) {
            if rs > 0.0 {
                x.push((size as f64).ln());
                y.push(rs.ln());
            }
        }
    }
    if x.len() < 2 {
        return Err(Error::ZeroVariance);
    }
    Ok(fit_line(&x, &y).slope)
}
