use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const STD_FLOOR: f64 = 1e-8;

/// Per-column mean and (population) standard deviation from training rows.
/// NaN cells are treated as absent: they are skipped when fitting and mapped
/// to 0 (the training mean) when applying.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl StandardizationParams {
    pub fn fit<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::TooFewRows { len: rows.len(), min: 2 });
        }
        let dim = rows[0].as_ref().len();
        let mut mean = vec![0.0; dim];
        let mut std = vec![0.0; dim];
        for j in 0..dim {
            let col: Vec<f64> = rows.iter().map(|r| r.as_ref()[j]).filter(|v| !v.is_nan()).collect();
            if col.is_empty() {
                std[j] = 1.0;
                continue;
            }
            let m = col.iter().sum::<f64>() / col.len() as f64;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / col.len() as f64;
            mean[j] = m;
            std[j] = var.sqrt().max(STD_FLOOR);
        }
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: row.len() });
        }
        Ok(row.iter().zip(self.mean.iter().zip(&self.std)).map(|(&v, (m, s))| if v.is_nan() { 0.0 } else { (v - m) / s }).collect())
    }

    pub fn apply<R: AsRef<[f64]>>(&self, rows: &[R]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.apply_row(r.as_ref())).collect()
    }
}
