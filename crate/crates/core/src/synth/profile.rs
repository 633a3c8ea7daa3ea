use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Group;

/// Knobs of the generator. Speed lobes per stroke, shape variability and
/// tremor model motor fragmentation; `speed_scale` and `pause_scale` model
/// slowness and hesitation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubjectProfile {
    pub group: Group,
    /// Mean lognormal count per stroke (≥ 1).
    pub lognormals_per_stroke: f64,
    /// Standard deviation of σ across components.
    pub sigma_jitter: f64,
    /// Tremor amplitude in mm/s.
    pub tremor_amp: f64,
    /// Tremor frequency in Hz.
    pub tremor_freq: f64,
    pub speed_scale: f64,
    /// Dilation of pen-up gaps.
    pub pause_scale: f64,
}

impl SubjectProfile {
    pub fn for_group(group: Group) -> Self {
        match group {
            Group::PD => Self {
                group,
                lognormals_per_stroke: 8.0,
                sigma_jitter: 0.15,
                tremor_amp: 3.0,
                tremor_freq: 5.0,
                speed_scale: 0.7,
                pause_scale: 1.5,
            },
            Group::EHC => Self {
                group,
                lognormals_per_stroke: 4.0,
                sigma_jitter: 0.05,
                tremor_amp: 0.5,
                tremor_freq: 5.0,
                speed_scale: 0.85,
                pause_scale: 1.2,
            },
            Group::YHC => Self {
                group,
                lognormals_per_stroke: 3.0,
                sigma_jitter: 0.02,
                tremor_amp: 0.0,
                tremor_freq: 5.0,
                speed_scale: 1.0,
                pause_scale: 1.0,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidProfile(m.into()));
        if !(self.lognormals_per_stroke >= 1.0 && self.lognormals_per_stroke.is_finite()) {
            return bad("lognormals_per_stroke must be at least 1");
        }
        if !(self.sigma_jitter >= 0.0 && self.sigma_jitter.is_finite()) {
            return bad("sigma_jitter must be non-negative");
        }
        if !(self.tremor_amp >= 0.0 && self.tremor_amp.is_finite()) {
            return bad("tremor_amp must be non-negative");
        }
        if !(3.0..=8.0).contains(&self.tremor_freq) {
            return bad("tremor_freq must lie in [3, 8] Hz");
        }
        if !(self.speed_scale > 0.0 && self.speed_scale.is_finite()) {
            return bad("speed_scale must be positive");
        }
        if !(self.pause_scale > 0.0 && self.pause_scale.is_finite()) {
            return bad("pause_scale must be positive");
        }
        Ok(())
    }

    /// `from + gap·(to − from)` on every numeric knob; the group is `to`'s.
    pub fn interpolate(from: &Self, to: &Self, gap: f64) -> Self {
        let l = |a: f64, b: f64| a + gap * (b - a);
        Self {
            group: to.group,
            lognormals_per_stroke: l(from.lognormals_per_stroke, to.lognormals_per_stroke).max(1.0),
            sigma_jitter: l(from.sigma_jitter, to.sigma_jitter).max(0.0),
            tremor_amp: l(from.tremor_amp, to.tremor_amp).max(0.0),
            tremor_freq: l(from.tremor_freq, to.tremor_freq).clamp(3.0, 8.0),
            speed_scale: l(from.speed_scale, to.speed_scale).max(0.05),
            pause_scale: l(from.pause_scale, to.pause_scale).max(0.05),
        }
    }
}
