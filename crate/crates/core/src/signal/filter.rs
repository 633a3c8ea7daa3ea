//! Fourth-order Butterworth low-pass applied forward and backward.

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy)]
struct Biquad {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
}

impl Biquad {
    fn lowpass(cutoff_hz: f64, rate_hz: f64, q: f64) -> Self {
        let w = 2.0 * PI * cutoff_hz / rate_hz;
        let (sin_w, cos_w) = w.sin_cos();
        let alpha = sin_w / (2.0 * q);
        let a0 = 1.0 + alpha;
        let b0 = (1.0 - cos_w) / 2.0 / a0;
        Biquad { b0, b1: 2.0 * b0, b2: b0, a1: -2.0 * cos_w / a0, a2: (1.0 - alpha) / a0 }
    }

    /// Direct form II transposed, starting from the steady state for `data[0]`.
    fn run(&self, data: &mut [f64]) {
        let Some(&x0) = data.first() else { return };
        let mut z1 = (1.0 - self.b0) * x0;
        let mut z2 = (self.b2 - self.a2) * x0;
        for v in data.iter_mut() {
            let x = *v;
            let y = self.b0 * x + z1;
            z1 = self.b1 * x - self.a1 * y + z2;
            z2 = self.b2 * x - self.a2 * y;
            *v = y;
        }
    }
}

/// Zero-phase fourth-order Butterworth low-pass.
#[derive(Debug, Clone)]
pub struct LowPass {
    sections: [Biquad; 2],
}

impl LowPass {
    pub fn new(cutoff_hz: f64, rate_hz: f64) -> Self {
        // pole-pair quality factors of the 4th-order Butterworth prototype
        let q1 = 1.0 / (2.0 * (PI / 8.0).cos());
        let q2 = 1.0 / (2.0 * (3.0 * PI / 8.0).cos());
        LowPass { sections: [Biquad::lowpass(cutoff_hz, rate_hz, q1), Biquad::lowpass(cutoff_hz, rate_hz, q2)] }
    }

    fn pass(&self, data: &mut [f64]) {
        for s in &self.sections {
            s.run(data);
        }
    }

    /// Filters `data` forward then backward. The line through the two end
    /// samples is removed first and restored afterwards, and the remainder is
    /// padded by odd reflection, so linear segments pass unchanged.
    pub fn filtfilt(&self, data: &[f64]) -> Vec<f64> {
        let n = data.len();
        if n < 3 {
            return data.to_vec();
        }
        let first = data[0];
        let slope = (data[n - 1] - first) / (n - 1) as f64;
        let trend = |i: usize| first + slope * i as f64;
        let resid: Vec<f64> = data.iter().enumerate().map(|(i, v)| v - trend(i)).collect();

        let pad = (n - 1).min(64);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        for k in (1..=pad).rev() {
            ext.push(-resid[k]);
        }
        ext.extend_from_slice(&resid);
        for k in 1..=pad {
            ext.push(-resid[n - 1 - k]);
        }

        self.pass(&mut ext);
        ext.reverse();
        self.pass(&mut ext);
        ext.reverse();

        ext[pad..pad + n].iter().enumerate().map(|(i, v)| v + trend(i)).collect()
    }
}

/// Convenience wrapper around [`LowPass::filtfilt`].
pub fn lowpass_zero_phase(data: &[f64], cutoff_hz: f64, rate_hz: f64) -> Vec<f64> {
    LowPass::new(cutoff_hz, rate_hz).filtfilt(data)
}
