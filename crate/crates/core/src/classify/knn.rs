use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl KnnModel {
    pub fn new(k: usize, rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidClassifierParams("K must be at least 1".into()));
        }
        Ok(Self { k, rows, labels })
    }

    /// Fraction of the K nearest rows labelled 1. Equal distances are
    /// ordered by row index.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        let dim = self.rows.first().map_or(0, |r| r.len());
        if x.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: x.len() });
        }
        let dists: Vec<f64> = self.rows.iter().map(|r| squared_distance(r, x)).collect();
        Ok(vote(&dists, &self.labels, self.k))
    }
}

/// Vote share for class 1 among the `k` smallest distances.
pub(crate) fn vote(dists: &[f64], labels: &[u8], k: usize) -> f64 {
    let mut idx: Vec<usize> = (0..dists.len()).collect();
    idx.sort_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(a.cmp(&b)));
    let k = k.min(idx.len());
    let ones = idx[..k].iter().filter(|&&i| labels[i] == 1).count();
    ones as f64 / k as f64
}

/// Vote ties go to class 0.
pub fn knn_label(score: f64) -> u8 {
    u8::from(score > 0.5)
}
