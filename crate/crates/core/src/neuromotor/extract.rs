//! Greedy Sigma-Lognormal extraction with bounded Levenberg–Marquardt
//! refinement.

use std::io::Write;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::lognormal::{reconstruct, LognormalComponent};
use crate::error::{Error, Result};

pub const MIN_STROKE_SAMPLES: usize = 20;
pub const SIGMA_BOUNDS: (f64, f64) = (0.05, 1.0);
pub const MU_BOUNDS: (f64, f64) = (-4.0, 1.0);
/// Earliest onset allowed before the stroke's first sample (s).
pub const T0_LEAD: f64 = 1.0;
/// Residual energy floor relative to signal energy (caps SNR at 120 dB).
const ENERGY_FLOOR: f64 = 1e-12;
/// √(2 ln 2): half-maximum offset in units of σ on the log-time axis.
const HALF_MAX_K: f64 = 1.177_410_022_515_474_6;
const FALLBACK_SIGMA: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaLognormalConfig {
    pub max_components: usize,
    pub target_snr_db: f64,
    pub max_iterations: usize,
    /// Minimum relative drop in residual energy for a component to be kept.
    pub min_improvement: f64,
    /// Jointly re-fit all components once extraction ends.
    pub joint_refinement: bool,
    /// Iteration cap of the joint re-fit, which has four parameters per
    /// component.
    pub joint_max_iterations: usize,
}

impl Default for SigmaLognormalConfig {
    fn default() -> Self {
        Self {
            max_components: 12,
            target_snr_db: 25.0,
            max_iterations: 50,
            min_improvement: 0.005,
            joint_refinement: true,
            joint_max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaLognormalFit {
    /// Sorted by peak time.
    pub components: Vec<LognormalComponent>,
    /// Reconstruction SNR after each component was added, aligned with
    /// `components`.
    pub snr_after: Vec<f64>,
    /// The same values in extraction order.
    pub snr_trace: Vec<f64>,
    pub reconstruction_snr_db: f64,
    pub residual_energy_ratio: f64,
    /// Extraction steps attempted (one per candidate lobe).
    pub attempts: usize,
    /// Steps whose refined parameters were rejected in favour of the
    /// analytic estimate.
    pub refine_failures: usize,
}

impl SigmaLognormalFit {
    pub fn reconstruct(&self, times: &[f64]) -> Vec<f64> {
        reconstruct(&self.components, times)
    }
}

fn energy(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn snr_db(signal_energy: f64, residual_energy: f64) -> f64 {
    10.0 * (signal_energy / residual_energy.max(ENERGY_FLOOR * signal_energy)).log10()
}

#[derive(Debug, Clone, Copy)]
struct Bounds {
    t0: (f64, f64),
    d_min: f64,
}

fn project(c: &mut LognormalComponent, b: &Bounds) {
    c.t0 = c.t0.clamp(b.t0.0, b.t0.1);
    c.mu = c.mu.clamp(MU_BOUNDS.0, MU_BOUNDS.1);
    c.sigma = c.sigma.clamp(SIGMA_BOUNDS.0, SIGMA_BOUNDS.1);
    c.d = c.d.max(b.d_min);
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[piv * n + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
            }
            b.swap(piv, col);
        }
        for row in col + 1..n {
            let f = a[row * n + col] / a[col * n + col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row * n + k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row * n + row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn window_cost(times: &[f64], target: &[f64], comps: &[LognormalComponent], w: &Range<usize>) -> f64 {
    w.clone()
        .map(|i| {
            let r = target[i] - comps.iter().map(|c| c.eval(times[i])).sum::<f64>();
            r * r
        })
        .sum()
}

/// Projected Levenberg–Marquardt with Marquardt diagonal scaling on the
/// samples in `w`. Returns the final cost.
fn refine(times: &[f64], target: &[f64], comps: &mut [LognormalComponent], bounds: &[Bounds], w: Range<usize>, max_iter: usize) -> f64 {
    let p = 4 * comps.len();
    let mut cost = window_cost(times, target, comps, &w);
    let mut lambda = 1e-3;
    for _ in 0..max_iter {
        let mut a = vec![0.0; p * p];
        let mut g = vec![0.0; p];
        let mut row = vec![0.0; p];
        for i in w.clone() {
            let mut model = 0.0;
            for (ci, c) in comps.iter().enumerate() {
                let (v, grad) = c.eval_with_gradient(times[i]);
                model += v;
                row[4 * ci..4 * ci + 4].copy_from_slice(&grad);
            }
            let r = target[i] - model;
            for j in 0..p {
                if row[j] == 0.0 {
                    continue;
                }
                g[j] += row[j] * r;
                for k in j..p {
                    a[j * p + k] += row[j] * row[k];
                }
            }
        }
        for j in 0..p {
            for k in 0..j {
                a[j * p + k] = a[k * p + j];
            }
        }
        let mut improved = false;
        while lambda < 1e12 {
            let mut m = a.clone();
            for j in 0..p {
                m[j * p + j] += lambda * a[j * p + j].max(1e-12 * (1.0 + a[j * p + j]));
            }
            let Some(delta) = solve(m, g.clone(), p) else {
                lambda *= 4.0;
                continue;
            };
            let mut trial = comps.to_vec();
            for (ci, c) in trial.iter_mut().enumerate() {
                c.d += delta[4 * ci];
                c.t0 += delta[4 * ci + 1];
                c.mu += delta[4 * ci + 2];
                c.sigma += delta[4 * ci + 3];
                project(c, &bounds[ci]);
            }
            let trial_cost = window_cost(times, target, &trial, &w);
            if trial_cost < cost {
                let rel = (cost - trial_cost) / cost.max(f64::MIN_POSITIVE);
                comps.copy_from_slice(&trial);
                cost = trial_cost;
                lambda = (lambda / 3.0).max(1e-12);
                improved = rel > 1e-12;
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            break;
        }
    }
    cost
}

/// Lobe around `peak`: extends while the residual keeps falling and stays
/// positive.
fn lobe(r: &[f64], peak: usize) -> Range<usize> {
    let mut lo = peak;
    while lo > 0 && r[lo - 1] < r[lo] && r[lo - 1] > 0.0 {
        lo -= 1;
    }
    let mut hi = peak;
    while hi + 1 < r.len() && r[hi + 1] < r[hi] && r[hi + 1] > 0.0 {
        hi += 1;
    }
    lo..hi + 1
}

fn interp_cross(t: &[f64], r: &[f64], a: usize, b: usize, level: f64) -> f64 {
    let f = (level - r[a]) / (r[b] - r[a]);
    t[a] + f * (t[b] - t[a])
}

/// Closed-form (t0, μ, σ) from the mode and the half-maximum times.
fn analytic_shape(tp: f64, t1: Option<f64>, t2: Option<f64>, span: f64) -> (f64, f64, f64) {
    if let (Some(t1), Some(t2)) = (t1, t2) {
        let denom = t1 + t2 - 2.0 * tp;
        if denom > 1e-9 * (t2 - t1) {
            let t0 = (t1 * t2 - tp * tp) / denom;
            if t0 < t1 {
                let sigma = ((t2 - t0).ln() - (t1 - t0).ln()) / (2.0 * HALF_MAX_K);
                if (SIGMA_BOUNDS.0..=SIGMA_BOUNDS.1).contains(&sigma) {
                    return (t0, (tp - t0).ln() + sigma * sigma, sigma);
                }
            }
        }
    }
    // shape not resolvable: fix σ and match the available half-widths
    let s = FALLBACK_SIGMA;
    let k = s * HALF_MAX_K;
    let scale = match (t1, t2) {
        (Some(t1), Some(t2)) => (t2 - t1) / (2.0 * k.sinh()),
        (Some(t1), None) => (tp - t1) / (1.0 - (-k).exp()),
        (None, Some(t2)) => (t2 - tp) / (k.exp() - 1.0),
        (None, None) => span / (2.0 * k.sinh()),
    };
    let scale = scale.max(1e-6);
    let u = scale.ln();
    (tp - scale, u + s * s, s)
}

struct Candidate {
    comp: LognormalComponent,
    bounds: Bounds,
    window: Range<usize>,
}

fn analytic_candidate(times: &[f64], r: &[f64], peak: usize, v_max: f64) -> Option<Candidate> {
    let w = lobe(r, peak);
    let n = r.len();
    let (mut tp, mut vp) = (times[peak], r[peak]);
    if peak > 0 && peak + 1 < n {
        let (a, b, c) = (r[peak - 1], r[peak], r[peak + 1]);
        let den = a - 2.0 * b + c;
        if den < 0.0 {
            let off = (0.5 * (a - c) / den).clamp(-0.5, 0.5);
            let dt = 0.5 * (times[peak + 1] - times[peak - 1]);
            tp += off * dt;
            vp = b - 0.25 * (a - c) * off;
        }
    }
    let half = 0.5 * vp;
    let t1 = (w.start..peak).rev().find(|&j| r[j] < half).map(|j| interp_cross(times, r, j, j + 1, half));
    let t2 = (peak + 1..w.end).find(|&j| r[j] < half).map(|j| interp_cross(times, r, j - 1, j, half));
    let span = times[w.end - 1] - times[w.start];
    let (t0, mu, sigma) = analytic_shape(tp, t1, t2, span.max(times[1] - times[0]));
    let bounds = Bounds { t0: (times[0] - T0_LEAD, tp), d_min: 1e-9 * v_max };
    let mut comp = LognormalComponent { d: 1.0, t0, mu, sigma };
    project(&mut comp, &bounds);
    // amplitude from the lobe area over the lognormal mass inside the lobe
    let area: f64 = (w.start..w.end - 1).map(|i| 0.5 * (r[i].max(0.0) + r[i + 1].max(0.0)) * (times[i + 1] - times[i])).sum();
    let normal = Normal::new(0.0, 1.0).ok()?;
    let cdf = |t: f64| {
        if t <= comp.t0 {
            0.0
        } else {
            normal.cdf(((t - comp.t0).ln() - comp.mu) / comp.sigma)
        }
    };
    let mass = (cdf(times[w.end - 1]) - cdf(times[w.start])).max(0.05);
    comp.d = (area / mass).max(bounds.d_min);
    if !(comp.d.is_finite() && comp.d > 0.0) {
        return None;
    }
    Some(Candidate { comp, bounds, window: w })
}

/// Decomposes a stroke speed profile into lognormal lobes.
pub fn extract_sigma_lognormal(times: &[f64], speed: &[f64], config: &SigmaLognormalConfig) -> Result<SigmaLognormalFit> {
    let n = speed.len();
    if n < MIN_STROKE_SAMPLES || times.len() != n {
        return Err(Error::TooShort { len: n.min(times.len()), min: MIN_STROKE_SAMPLES });
    }
    let v_max = speed.iter().fold(0.0f64, |a, &v| a.max(v));
    if !(v_max > 0.0) || speed.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoPeak);
    }
    // local time keeps the fit independent of where the stroke sits
    let origin = times[0];
    let tl: Vec<f64> = times.iter().map(|t| t - origin).collect();
    let total = energy(speed);
    let mut comps: Vec<LognormalComponent> = Vec::new();
    let mut snr_after = Vec::new();
    let mut resid = speed.to_vec();
    let mut res_energy = total;
    let (mut attempts, mut failures) = (0, 0);
    let span = (tl[0], tl[n - 1]);

    while comps.len() < config.max_components && snr_db(total, res_energy) < config.target_snr_db {
        let peak = (0..n).max_by(|&a, &b| resid[a].total_cmp(&resid[b]).then(b.cmp(&a))).unwrap_or(0);
        if resid[peak] <= 1e-9 * v_max {
            break;
        }
        let Some(cand) = analytic_candidate(&tl, &resid, peak, v_max) else {
            break;
        };
        attempts += 1;
        let energy_with = |c: &LognormalComponent| -> f64 { resid.iter().zip(&tl).map(|(r, &t)| (r - c.eval(t)).powi(2)).sum() };
        let analytic_e = energy_with(&cand.comp);
        let mut refined = [cand.comp];
        refine(&tl, &resid, &mut refined, &[cand.bounds], cand.window.clone(), config.max_iterations);
        let refined = refined[0];
        let refined_e = energy_with(&refined);
        let in_span = |c: &LognormalComponent| (span.0..=span.1).contains(&c.t_peak());
        let needed = (1.0 - config.min_improvement) * res_energy;
        let chosen = if refined_e <= needed && refined_e.is_finite() && in_span(&refined) {
            Some((refined, refined_e))
        } else {
            failures += 1;
            (analytic_e <= needed && in_span(&cand.comp)).then_some((cand.comp, analytic_e))
        };
        let Some((c, e)) = chosen else { break };
        for (r, &t) in resid.iter_mut().zip(&tl) {
            *r -= c.eval(t);
        }
        res_energy = e;
        comps.push(c);
        snr_after.push(snr_db(total, res_energy));
    }
    if comps.is_empty() {
        return Err(Error::NoPeak);
    }

    if config.joint_refinement && comps.len() > 1 {
        let mut joint = comps.clone();
        let bounds = vec![Bounds { t0: (tl[0] - T0_LEAD, tl[n - 1]), d_min: 1e-9 * v_max }; joint.len()];
        let cost = refine(&tl, speed, &mut joint, &bounds, 0..n, config.joint_max_iterations);
        if cost < res_energy && joint.iter().all(|c| (span.0..=span.1).contains(&c.t_peak())) {
            comps = joint;
            res_energy = cost;
        }
    }

    let mut order: Vec<usize> = (0..comps.len()).collect();
    order.sort_by(|&a, &b| comps[a].t_peak().total_cmp(&comps[b].t_peak()));
    let components: Vec<LognormalComponent> = order.iter().map(|&i| LognormalComponent { t0: comps[i].t0 + origin, ..comps[i] }).collect();
    let snr_trace = snr_after;
    let snr_after = order.iter().map(|&i| snr_trace[i]).collect();
    Ok(SigmaLognormalFit {
        components,
        snr_after,
        snr_trace,
        reconstruction_snr_db: snr_db(total, res_energy),
        residual_energy_ratio: res_energy / total,
        attempts,
        refine_failures: failures,
    })
}

/// Debug dump: `component_index,D,t0,mu,sigma,t_peak,snr_after`.
pub fn write_fit_dump<W: Write>(mut w: W, fit: &SigmaLognormalFit) -> Result<()> {
    writeln!(w, "component_index,D,t0,mu,sigma,t_peak,snr_after")?;
    for (i, (c, s)) in fit.components.iter().zip(&fit.snr_after).enumerate() {
        writeln!(w, "{i},{},{},{},{},{},{}", c.d, c.t0, c.mu, c.sigma, c.t_peak(), s)?;
    }
    Ok(())
}
