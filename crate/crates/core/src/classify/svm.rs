//! Soft-margin RBF support vector machine trained by SMO with second-order
//! working-set selection.

use serde::{Deserialize, Serialize};

use super::knn::squared_distance;
use crate::error::{Error, Result};

pub const KKT_TOLERANCE: f64 = 1e-3;
pub const MAX_ITERATIONS: usize = 100_000;
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub c: f64,
    pub gamma: f64,
    /// α_i·y_i for each support vector.
    pub dual_coef: Vec<f64>,
    pub support: Vec<Vec<f64>>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SvmModel {
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if let Some(s) = self.support.first() {
            if s.len() != x.len() {
                return Err(Error::DimensionMismatch { expected: s.len(), got: x.len() });
            }
        }
        Ok(self.dual_coef.iter().zip(&self.support).map(|(a, s)| a * (-self.gamma * squared_distance(s, x)).exp()).sum::<f64>() + self.bias)
    }

    /// |Σ α_i y_i|.
    pub fn equality_violation(&self) -> f64 {
        self.dual_coef.iter().sum::<f64>().abs()
    }
}

/// Dual solution on a precomputed kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    /// Decision offset: f(x) = Σ α_i y_i k(x_i, x) + bias.
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// SMO on kernel matrix `k` (row-major n×n) with labels in {0, 1}.
pub fn solve_dual(k: &[f64], labels: &[u8], c: f64) -> Result<DualSolution> {
    let n = labels.len();
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidClassifierParams(format!("C = {c}")));
    }
    let y: Vec<f64> = labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let q = |i: usize, j: usize| y[i] * y[j] * k[i * n + j];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        // i: maximal violating index from the upper set
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if up(alpha[t], y[t]) && -y[t] * grad[t] > gmax {
                gmax = -y[t] * grad[t];
                i = t;
            }
        }
        let mut gmin = f64::INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !low(alpha[t], y[t]) {
                continue;
            }
            let v = -y[t] * grad[t];
            gmin = gmin.min(v);
            if i != usize::MAX && v < gmax {
                let b = gmax - v;
                let mut a = k[i * n + i] + k[t * n + t] - 2.0 * k[i * n + t];
                if a <= 0.0 {
                    a = TAU;
                }
                let obj = -b * b / a;
                if obj < best {
                    best = obj;
                    j = t;
                }
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < KKT_TOLERANCE {
            converged = true;
            break;
        }
        iterations += 1;
        let (ai, aj) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = k[i * n + i] + k[j * n + j] - 2.0 * k[i * n + j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = k[i * n + i] + k[j * n + j] - 2.0 * k[i * n + j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - ai, alpha[j] - aj);
        for t in 0..n {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    }
    // offset from free vectors, else midpoint of the feasible interval
    let (mut ub, mut lb, mut sum, mut free) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum += yg;
        }
    }
    let rho = if free > 0 { sum / free as f64 } else { 0.5 * (ub + lb) };
    Ok(DualSolution { alpha, bias: -rho, iterations, converged })
}

pub fn rbf_kernel_from_sq(d2: &[f64], gamma: f64) -> Vec<f64> {
    d2.iter().map(|d| (-gamma * d).exp()).collect()
}

pub fn pairwise_sq(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = squared_distance(&rows[i], &rows[j]);
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    d
}

/// Canonical row order (lexicographic on values, then label) so the solution
/// does not depend on how the training rows were ordered.
pub(crate) fn canonical_order(rows: &[Vec<f64>], labels: &[u8]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..rows.len()).collect();
    idx.sort_by(|&a, &b| {
        rows[a]
            .iter()
            .zip(&rows[b])
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(labels[a].cmp(&labels[b]))
    });
    idx
}

/// Builds the model from a dual solution over rows in canonical order.
pub(crate) fn model_from_solution(rows: &[Vec<f64>], labels: &[u8], sol: &DualSolution, c: f64, gamma: f64) -> SvmModel {
    let mut dual_coef = Vec::new();
    let mut support = Vec::new();
    for (i, &a) in sol.alpha.iter().enumerate() {
        if a > 0.0 {
            dual_coef.push(if labels[i] == 1 { a } else { -a });
            support.push(rows[i].clone());
        }
    }
    SvmModel { c, gamma, dual_coef, support, bias: sol.bias, iterations: sol.iterations, converged: sol.converged }
}

pub fn train_svm(rows: &[Vec<f64>], labels: &[u8], c: f64, gamma: f64) -> Result<SvmModel> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidClassifierParams(format!("gamma = {gamma}")));
    }
    let order = canonical_order(rows, labels);
    let rows: Vec<Vec<f64>> = order.iter().map(|&i| rows[i].clone()).collect();
    let labels: Vec<u8> = order.iter().map(|&i| labels[i]).collect();
    let k = rbf_kernel_from_sq(&pairwise_sq(&rows), gamma);
    let sol = solve_dual(&k, &labels, c)?;
    if !sol.converged {
        log::warn!("SVM stopped at the iteration cap (C={c}, gamma={gamma})");
    }
    Ok(model_from_solution(&rows, &labels, &sol, c, gamma))
}
