//! Sigma-Lognormal synthesizer for labelled tablet recordings.

pub mod cohort;
pub mod profile;
pub mod task;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use cohort::{
    plan_cohort, synth_cohort, synth_subject, AgeStats, CohortConfig, CohortOutput, Demographics, SubjectSpec, SubjectTruth,
    COHORT_CONFIG_FILE, GROUND_TRUTH_FILE, MANIFEST_FILE,
};
pub use profile::SubjectProfile;
pub use task::{synth_task, synth_task_with, StrokeTruth, TaskTruth, Tremor};

use crate::neuromotor::{reconstruct, LognormalComponent};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for a path of counters below `master`; independent of the
/// order in which children are generated.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Noise-free speed profile made of `k` lobes whose peaks are at least four
/// time spreads apart, sampled at `rate` Hz.
pub fn well_separated_lognormals(k: usize, seed: u64, rate: f64) -> (Vec<LognormalComponent>, Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut comps: Vec<LognormalComponent> = Vec::with_capacity(k);
    let mut next_peak = 0.25;
    for _ in 0..k {
        let sigma = rng.gen_range(0.15..0.35);
        let mu = rng.gen_range(-1.9..-1.3);
        let d = rng.gen_range(5.0..20.0);
        let t0 = next_peak - f64::exp(mu - sigma * sigma);
        let c = LognormalComponent { d, t0, mu, sigma };
        next_peak = c.t_peak() + 4.0 * c.time_spread() + rng.gen_range(0.0..0.1);
        comps.push(c);
    }
    let last = comps.last().map_or(0.0, |c| c.t_peak() + 6.0 * c.time_spread());
    let n = (last * rate).ceil() as usize + 1;
    let times: Vec<f64> = (0..n).map(|i| i as f64 / rate).collect();
    let speed = reconstruct(&comps, &times);
    (comps, times, speed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_path_dependent() {
        assert_ne!(derive_seed(1, &[0, 1]), derive_seed(1, &[1, 0]));
        assert_ne!(derive_seed(1, &[0]), derive_seed(2, &[0]));
        assert_eq!(derive_seed(7, &[3, 4]), derive_seed(7, &[3, 4]));
    }

    #[test]
    fn separated_lobes_do_not_overlap_much() {
        let (comps, _, speed) = well_separated_lognormals(5, 1, 180.0);
        assert_eq!(comps.len(), 5);
        assert!(speed.iter().all(|v| v.is_finite() && *v >= 0.0));
        for w in comps.windows(2) {
            assert!(w[1].t_peak() - w[0].t_peak() >= 4.0 * w[0].time_spread());
        }
    }
}
