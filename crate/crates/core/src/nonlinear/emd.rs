//! Empirical mode decomposition by cubic-spline sifting.

use crate::error::{Error, Result};

pub const MIN_EMD_LEN: usize = 256;
pub const MAX_IMFS: usize = 10;
pub const MAX_SIFTS: usize = 10;
pub const SD_THRESHOLD: f64 = 0.3;

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub imfs: Vec<Vec<f64>>,
    pub residual: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmdFeatures {
    pub imf_count: usize,
    pub imf1_energy_ratio: f64,
    /// Hz, from the zero-crossing rate.
    pub imf1_mean_freq: f64,
}

/// Interior local maxima and minima; a flat top or bottom counts once, at
/// its centre.
pub fn extrema(h: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let (mut maxs, mut mins) = (Vec::new(), Vec::new());
    let n = h.len();
    let mut i = 1;
    while i + 1 < n {
        if h[i] == h[i - 1] {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < n && h[j + 1] == h[i] {
            j += 1;
        }
        if j + 1 >= n {
            break;
        }
        let mid = (i + j) / 2;
        if h[i] > h[i - 1] && h[j + 1] < h[i] {
            maxs.push(mid);
        } else if h[i] < h[i - 1] && h[j + 1] > h[i] {
            mins.push(mid);
        }
        i = j + 1;
    }
    (maxs, mins)
}

/// Natural cubic spline through `(xs, ys)` evaluated at 0..n.
fn spline_eval(xs: &[f64], ys: &[f64], n: usize) -> Vec<f64> {
    let k = xs.len();
    if k == 1 {
        return vec![ys[0]; n];
    }
    // second derivatives via the tridiagonal system (Thomas algorithm)
    let mut m = vec![0.0; k];
    if k > 2 {
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let mut diag = vec![0.0; k];
        let mut rhs = vec![0.0; k];
        for i in 1..k - 1 {
            diag[i] = 2.0 * (h[i - 1] + h[i]);
            rhs[i] = 6.0 * ((ys[i + 1] - ys[i]) / h[i] - (ys[i] - ys[i - 1]) / h[i - 1]);
        }
        for i in 2..k - 1 {
            let w = h[i - 1] / diag[i - 1];
            diag[i] -= w * h[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        for i in (1..k - 1).rev() {
            let upper = if i + 1 < k - 1 { h[i] * m[i + 1] } else { 0.0 };
            m[i] = (rhs[i] - upper) / diag[i];
        }
    }
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for t in 0..n {
        let t = t as f64;
        while seg + 2 < k && t > xs[seg + 1] {
            seg += 1;
        }
        let (x0, x1) = (xs[seg], xs[seg + 1]);
        let h = x1 - x0;
        let (a, b) = ((x1 - t) / h, (t - x0) / h);
        let v = a * ys[seg] + b * ys[seg + 1] + ((a * a * a - a) * m[seg] + (b * b * b - b) * m[seg + 1]) * h * h / 6.0;
        out.push(v);
    }
    out
}

/// Envelope through `idx` with up to two extrema mirrored about each end.
fn envelope(h: &[f64], idx: &[usize]) -> Vec<f64> {
    let n = h.len();
    let last = (n - 1) as f64;
    let mirror = idx.len().min(2);
    let mut xs = Vec::with_capacity(idx.len() + 2 * mirror);
    let mut ys = Vec::with_capacity(xs.capacity());
    for &p in idx[..mirror].iter().rev() {
        xs.push(-(p as f64));
        ys.push(h[p]);
    }
    for &p in idx {
        xs.push(p as f64);
        ys.push(h[p]);
    }
    for &p in idx[idx.len() - mirror..].iter().rev() {
        xs.push(2.0 * last - p as f64);
        ys.push(h[p]);
    }
    spline_eval(&xs, &ys, n)
}

fn energy(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn sift(residual: &[f64]) -> Vec<f64> {
    let mut h = residual.to_vec();
    for _ in 0..MAX_SIFTS {
        let (maxs, mins) = extrema(&h);
        if maxs.is_empty() || mins.is_empty() {
            break;
        }
        let upper = envelope(&h, &maxs);
        let lower = envelope(&h, &mins);
        let mut num = 0.0;
        let den = energy(&h);
        for i in 0..h.len() {
            let m = 0.5 * (upper[i] + lower[i]);
            num += m * m;
            h[i] -= m;
        }
        if den == 0.0 || num / den < SD_THRESHOLD {
            break;
        }
    }
    h
}

pub fn decompose(series: &[f64]) -> Result<Decomposition> {
    if series.len() < MIN_EMD_LEN {
        return Err(Error::SeriesTooShort { len: series.len(), min: MIN_EMD_LEN });
    }
    let floor = energy(series) * 1e-20;
    let mut residual = series.to_vec();
    let mut imfs = Vec::new();
    while imfs.len() < MAX_IMFS {
        let (maxs, mins) = extrema(&residual);
        if maxs.is_empty() || mins.is_empty() || energy(&residual) <= floor {
            break;
        }
        let imf = sift(&residual);
        residual.iter_mut().zip(&imf).for_each(|(r, v)| *r -= v);
        imfs.push(imf);
    }
    Ok(Decomposition { imfs, residual })
}

pub fn zero_crossings(v: &[f64]) -> usize {
    let mut last = 0.0f64;
    let mut count = 0;
    for &x in v {
        if x == 0.0 {
            continue;
        }
        if last != 0.0 && (x > 0.0) != (last > 0.0) {
            count += 1;
        }
        last = x;
    }
    count
}

pub fn emd_features(series: &[f64], sample_rate: f64) -> Result<EmdFeatures> {
    let d = decompose(series)?;
    let Some(first) = d.imfs.first() else {
        return Ok(EmdFeatures { imf_count: 0, imf1_energy_ratio: 0.0, imf1_mean_freq: 0.0 });
    };
    let total: f64 = d.imfs.iter().map(|v| energy(v)).sum::<f64>() + energy(&d.residual);
    let duration = series.len() as f64 / sample_rate;
    Ok(EmdFeatures {
        imf_count: d.imfs.len(),
        imf1_energy_ratio: if total > 0.0 { energy(first) / total } else { 0.0 },
        imf1_mean_freq: zero_crossings(first) as f64 / (2.0 * duration),
    })
}
