use crate::error::{Error, Result};
use crate::signal::{lowpass_zero_phase, DEFAULT_CUTOFF_HZ};

pub const MIN_SNR_LEN: usize = 64;
/// Noise energy is floored at this fraction of signal energy (120 dB cap).
pub const NOISE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrPair {
    pub conventional_db: f64,
    pub teager_db: f64,
}

/// Teager–Kaiser energy Ψ(i) = s_i² − s_{i−1}s_{i+1} for interior samples.
pub fn teager(s: &[f64]) -> Vec<f64> {
    s.windows(3).map(|w| w[1] * w[1] - w[0] * w[2]).collect()
}

fn ratio_db(signal: f64, noise: f64) -> f64 {
    if signal <= 0.0 {
        return 0.0;
    }
    10.0 * (signal / noise.max(NOISE_FLOOR * signal)).log10()
}

pub fn energy_snr(series: &[f64], sample_rate: f64) -> Result<SnrPair> {
    if series.len() < MIN_SNR_LEN {
        return Err(Error::SeriesTooShort { len: series.len(), min: MIN_SNR_LEN });
    }
    if series.iter().all(|&v| v == 0.0) {
        return Err(Error::SilentSignal);
    }
    if !(sample_rate > 2.0 * DEFAULT_CUTOFF_HZ) {
        return Err(Error::InvalidRate(format!("{sample_rate} Hz")));
    }
    let smooth = lowpass_zero_phase(series, DEFAULT_CUTOFF_HZ, sample_rate);
    let noise: Vec<f64> = series.iter().zip(&smooth).map(|(s, l)| s - l).collect();
    let sum_sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    let sum_abs = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();
    Ok(SnrPair {
        conventional_db: ratio_db(sum_sq(series), sum_sq(&noise)),
        teager_db: ratio_db(sum_abs(&teager(series)), sum_abs(&teager(&noise))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    use std::f64::consts::PI;

    const FS: f64 = 180.0;

    #[test]
    fn clean_low_sine() {
        let s: Vec<f64> = (0..900).map(|i| (2.0 * PI * 2.0 * i as f64 / FS).sin()).collect();
        assert!(energy_snr(&s, FS).unwrap().conventional_db >= 40.0);
    }

    #[test]
    fn noisy_sine_twenty_db() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let amp = 10.0 * 2f64.sqrt();
        let s: Vec<f64> = (0..1800)
            .map(|i| {
                amp * (2.0 * PI * 2.0 * i as f64 / FS).sin() + {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    e
                }
            })
            .collect();
        let snr = energy_snr(&s, FS).unwrap().conventional_db;
        assert!((snr - 20.0).abs() < 3.0, "{snr}");
    }

    #[test]
    fn teager_identity() {
        let (a, w) = (1.7, 0.31);
        let s: Vec<f64> = (0..200).map(|i| a * (w * i as f64).sin()).collect();
        for v in teager(&s) {
            assert!((v - a * a * w.sin().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn errors() {
        assert_eq!(energy_snr(&[0.0; 100], FS).unwrap_err(), Error::SilentSignal);
        assert!(matches!(energy_snr(&[1.0; 10], FS), Err(Error::SeriesTooShort { .. })));
    }

    #[test]
    fn constant_hits_cap() {
        let snr = energy_snr(&[2.0; 200], FS).unwrap();
        assert!(snr.conventional_db <= 120.0 + 1e-9 && snr.conventional_db > 100.0);
    }
}
