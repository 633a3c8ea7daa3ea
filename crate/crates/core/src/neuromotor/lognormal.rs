use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One lognormal speed lobe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LognormalComponent {
    /// Amplitude (mm).
    pub d: f64,
    /// Time origin (s).
    pub t0: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl LognormalComponent {
    pub fn new(d: f64, t0: f64, mu: f64, sigma: f64) -> Result<Self> {
        let c = Self { d, t0, mu, sigma };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d > 0.0 && self.sigma > 0.0) || ![self.d, self.t0, self.mu, self.sigma].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParams(format!("{self:?}")));
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        let dt = t - self.t0;
        if dt <= 0.0 {
            return 0.0;
        }
        let z = (dt.ln() - self.mu) / self.sigma;
        self.d / (self.sigma * (2.0 * PI).sqrt() * dt) * (-0.5 * z * z).exp()
    }

    pub fn eval_grid(&self, times: &[f64]) -> Result<Vec<f64>> {
        self.validate()?;
        Ok(times.iter().map(|&t| self.eval(t)).collect())
    }

    /// Mode of the lobe.
    pub fn t_peak(&self) -> f64 {
        self.t0 + self.rise_time()
    }

    /// Time from onset to peak.
    pub fn rise_time(&self) -> f64 {
        (self.mu - self.sigma * self.sigma).exp()
    }

    pub fn peak_speed(&self) -> f64 {
        self.d * (0.5 * self.sigma * self.sigma - self.mu).exp() / (self.sigma * (2.0 * PI).sqrt())
    }

    /// Standard deviation of the lobe viewed as a distribution over time.
    pub fn time_spread(&self) -> f64 {
        let s2 = self.sigma * self.sigma;
        ((s2.exp() - 1.0) * (2.0 * self.mu + s2).exp()).sqrt()
    }

    /// Value and gradient with respect to (D, t0, μ, σ).
    #[inline]
    pub(crate) fn eval_with_gradient(&self, t: f64) -> (f64, [f64; 4]) {
        let dt = t - self.t0;
        if dt <= 0.0 {
            return (0.0, [0.0; 4]);
        }
        let z = (dt.ln() - self.mu) / self.sigma;
        let v = self.d / (self.sigma * (2.0 * PI).sqrt() * dt) * (-0.5 * z * z).exp();
        (v, [v / self.d, v / dt * (1.0 + z / self.sigma), v * z / self.sigma, v * (z * z - 1.0) / self.sigma])
    }
}

pub fn reconstruct(components: &[LognormalComponent], times: &[f64]) -> Vec<f64> {
    times.iter().map(|&t| components.iter().map(|c| c.eval(t)).sum()).collect()
}
