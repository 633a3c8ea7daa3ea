//! Delay embedding and automatic choice of its parameters.

use serde::{Deserialize, Serialize};

use super::entropy::histogram_bins;
use crate::error::{Error, Result};

pub const MIN_SELECT_LEN: usize = 500;
pub const MAX_EMBEDDING_DIM: usize = 10;
pub const AMI_BINS: usize = 64;
/// Kennel's distance-ratio threshold.
pub const FNN_RATIO_TOL: f64 = 15.0;
/// Kennel's attractor-size threshold (the noise guard).
pub const FNN_SIZE_TOL: f64 = 2.0;
pub const FNN_FRACTION: f64 = 0.01;
/// Upper bound on query points per FNN pass; longer series are strided.
const FNN_MAX_QUERIES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingParams {
    pub tau: usize,
    pub m: usize,
    pub theiler_window: usize,
}

impl EmbeddingParams {
    pub fn new(tau: usize, m: usize, theiler_window: usize) -> Result<Self> {
        if tau < 1 || !(2..=20).contains(&m) || theiler_window < tau {
            return Err(Error::InvalidEmbedding(format!("tau={tau}, m={m}, theiler={theiler_window}")));
        }
        Ok(Self { tau, m, theiler_window })
    }
}

/// Reconstructed phase-space points, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoints {
    dim: usize,
    data: Vec<f64>,
}

impl PhasePoints {
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(0, |r| r.len());
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self { dim, data }
    }

    pub fn from_flat(dim: usize, data: Vec<f64>) -> Self {
        assert!(dim > 0 && data.len() % dim == 0);
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn truncate(&self, n: usize) -> PhasePoints {
        let n = n.min(self.len());
        PhasePoints { dim: self.dim, data: self.data[..n * self.dim].to_vec() }
    }

    #[inline]
    pub fn dist2(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.row(i), self.row(j));
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    }
}

/// `points[i][j] = series[i + j*tau]`.
pub fn embed_delay(series: &[f64], tau: usize, m: usize) -> Result<PhasePoints> {
    if tau == 0 || m == 0 {
        return Err(Error::InvalidEmbedding(format!("tau={tau}, m={m}")));
    }
    let span = (m - 1) * tau;
    if series.len() <= span + 1 {
        return Err(Error::SeriesTooShort { len: series.len(), min: span + 2 });
    }
    let rows = series.len() - span;
    let mut data = Vec::with_capacity(rows * m);
    for i in 0..rows {
        for j in 0..m {
            data.push(series[i + j * tau]);
        }
    }
    Ok(PhasePoints { dim: m, data })
}

pub fn embed(series: &[f64], params: &EmbeddingParams) -> Result<PhasePoints> {
    embed_delay(series, params.tau, params.m)
}

/// Mutual information (nats) between `series[t]` and `series[t + lag]`
/// from a `bins`×`bins` histogram over the full series range.
pub fn auto_mutual_information(series: &[f64], lag: usize, bins: usize) -> f64 {
    let n = series.len().saturating_sub(lag);
    if n == 0 {
        return 0.0;
    }
    let idx = histogram_bins(series, bins);
    let mut joint = vec![0u32; bins * bins];
    let mut pa = vec![0u32; bins];
    let mut pb = vec![0u32; bins];
    for t in 0..n {
        let (a, b) = (idx[t], idx[t + lag]);
        joint[a * bins + b] += 1;
        pa[a] += 1;
        pb[b] += 1;
    }
    let nf = n as f64;
    let mut mi = 0.0;
    for a in 0..bins {
        if pa[a] == 0 {
            continue;
        }
        for b in 0..bins {
            let c = joint[a * bins + b];
            if c == 0 {
                continue;
            }
            let pab = c as f64 / nf;
            mi += pab * (pab * nf * nf / (pa[a] as f64 * pb[b] as f64)).ln();
        }
    }
    mi
}

fn autocorrelation(series: &[f64], lag: usize) -> f64 {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let var: f64 = series.iter().map(|v| (v - mean) * (v - mean)).sum();
    if var == 0.0 || lag >= n {
        return 0.0;
    }
    (0..n - lag).map(|i| (series[i] - mean) * (series[i + lag] - mean)).sum::<f64>() / var
}

/// First local minimum of the auto mutual information for lags up to N/10,
/// else the first lag where the autocorrelation drops below 1/e, else 1.
pub fn select_delay(series: &[f64]) -> usize {
    let max_lag = (series.len() / 10).max(2);
    let mut prev = auto_mutual_information(series, 1, AMI_BINS);
    let mut cur = auto_mutual_information(series, 2, AMI_BINS);
    for lag in 2..max_lag {
        let next = auto_mutual_information(series, lag + 1, AMI_BINS);
        if cur < prev && cur <= next {
            return lag;
        }
        prev = cur;
        cur = next;
    }
    let threshold = (-1.0f64).exp();
    (1..=max_lag).find(|&lag| autocorrelation(series, lag) < threshold).unwrap_or(1)
}

/// Fraction of false nearest neighbours when going from `d` to `d + 1`
/// dimensions.
pub fn false_neighbor_fraction(series: &[f64], tau: usize, d: usize) -> f64 {
    let n = series.len().saturating_sub(d * tau);
    if n < 2 {
        return 1.0;
    }
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    let size = (series.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / series.len() as f64).sqrt();
    let stride = n.div_ceil(FNN_MAX_QUERIES).max(1);
    let coord = |i: usize, j: usize| series[i + j * tau];
    let mut false_count = 0usize;
    let mut total = 0usize;
    for i in (0..n).step_by(stride) {
        let mut best = f64::INFINITY;
        let mut best_j = usize::MAX;
        for j in 0..n {
            if j == i {
                continue;
            }
            let mut d2 = 0.0;
            for k in 0..d {
                let diff = coord(i, k) - coord(j, k);
                d2 += diff * diff;
                if d2 >= best {
                    break;
                }
            }
            if d2 < best {
                best = d2;
                best_j = j;
            }
        }
        if best_j == usize::MAX {
            continue;
        }
        total += 1;
        let extra = (coord(i, d) - coord(best_j, d)).abs();
        let rd = best.sqrt();
        let ratio_false = if rd > 0.0 { extra / rd > FNN_RATIO_TOL } else { extra > 0.0 };
        let size_false = size > 0.0 && (best + extra * extra).sqrt() / size > FNN_SIZE_TOL;
        if ratio_false || size_false {
            false_count += 1;
        }
    }
    if total == 0 {
        1.0
    } else {
        false_count as f64 / total as f64
    }
}

pub fn select_embedding(series: &[f64]) -> Result<EmbeddingParams> {
    if series.len() < MIN_SELECT_LEN {
        return Err(Error::SeriesTooShort { len: series.len(), min: MIN_SELECT_LEN });
    }
    let (lo, hi) = series.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(hi > lo) {
        return Err(Error::SeriesDegenerate);
    }
    let tau = select_delay(series);
    let mut m = MAX_EMBEDDING_DIM;
    for d in 1..MAX_EMBEDDING_DIM {
        if series.len() <= (d + 1) * tau + 1 {
            m = d.max(2);
            break;
        }
        if false_neighbor_fraction(series, tau, d) < FNN_FRACTION {
            m = d.max(2);
            break;
        }
    }
    EmbeddingParams::new(tau, m, tau)
}
