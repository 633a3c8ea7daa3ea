use super::filter::LowPass;
use super::recording::{PenSample, PenState, TaskRecording};
use crate::error::{Error, Result};

pub const DEFAULT_CUTOFF_HZ: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PreprocessConfig {
    pub target_rate_hz: f64,
    pub cutoff_hz: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self { target_rate_hz: super::recording::NOMINAL_RATE_HZ, cutoff_hz: DEFAULT_CUTOFF_HZ }
    }
}

/// Maximal runs of equal pen state, as half-open index ranges.
pub(crate) fn pen_runs(samples: &[PenSample]) -> Vec<(PenState, std::ops::Range<usize>)> {
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..=samples.len() {
        if i == samples.len() || samples[i].pen_state != samples[start].pen_state {
            runs.push((samples[start].pen_state, start..i));
            start = i;
        }
    }
    runs
}

fn lerp(a: f64, b: f64, w: f64) -> f64 {
    a + (b - a) * w
}

fn lerp_opt(a: Option<f64>, b: Option<f64>, w: f64) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) => Some(lerp(a, b, w)),
        (a, b) => a.or(b),
    }
}

/// Interpolates `run` (time-sorted) at time `t`, clamping outside its span.
fn interpolate(run: &[PenSample], cursor: &mut usize, t: f64) -> (f64, f64, f64, Option<f64>, Option<f64>) {
    while *cursor + 1 < run.len() - 1 && run[*cursor + 1].t <= t {
        *cursor += 1;
    }
    let a = &run[*cursor];
    if run.len() == 1 {
        return (a.x, a.y, a.p, a.azimuth, a.altitude);
    }
    let b = &run[*cursor + 1];
    let w = ((t - a.t) / (b.t - a.t)).clamp(0.0, 1.0);
    (lerp(a.x, b.x, w), lerp(a.y, b.y, w), lerp(a.p, b.p, w), lerp_opt(a.azimuth, b.azimuth, w), lerp_opt(a.altitude, b.altitude, w))
}

/// Resamples onto a uniform grid starting at t = 0 and low-pass filters the
/// pen-down coordinates. Pen-down runs are interpolated only from their own
/// samples; grid points between runs become pen-up samples.
pub fn preprocess(rec: &TaskRecording, config: &PreprocessConfig) -> Result<TaskRecording> {
    let rate = config.target_rate_hz;
    let cutoff = config.cutoff_hz;
    if !(rate > 0.0 && cutoff > 0.0 && rate > 2.0 * cutoff) {
        return Err(Error::InvalidRate(format!("target rate {rate} Hz must exceed twice the cutoff {cutoff} Hz")));
    }
    let runs = pen_runs(&rec.samples);
    if !runs.iter().any(|(s, r)| s.is_down() && r.len() >= 4) {
        return Err(Error::DegenerateRecording);
    }

    let origin = rec.samples[0].t;
    let span = rec.samples.last().map(|s| s.t - origin).unwrap_or(0.0);
    let n_grid = (span * rate + 1e-9).floor() as usize + 1;
    let grid_t = |k: usize| k as f64 / rate;
    const EPS: f64 = 1e-9;

    let mut out: Vec<Option<PenSample>> = vec![None; n_grid];
    let mut run_of: Vec<usize> = vec![usize::MAX; n_grid];
    for (run_id, (state, range)) in runs.iter().enumerate() {
        if !state.is_down() {
            continue;
        }
        let run = &rec.samples[range.clone()];
        let t_start = run[0].t - origin;
        let t_end = run[run.len() - 1].t - origin;
        let k0 = ((t_start * rate) - EPS).ceil().max(0.0) as usize;
        let k1 = (((t_end * rate) + EPS).floor() as usize).min(n_grid - 1);
        let mut cursor = 0;
        for k in k0..=k1 {
            let t = grid_t(k);
            let (x, y, p, azimuth, altitude) = interpolate(run, &mut cursor, t + origin);
            out[k] = Some(PenSample { t, x, y, p: p.clamp(0.0, 1.0), pen_state: PenState::Down, azimuth, altitude });
            run_of[k] = run_id;
        }
    }

    // Adjacent grid samples from different source runs would merge two
    // strokes; drop the first sample of the later run to keep the boundary.
    for k in 1..n_grid {
        if run_of[k] != usize::MAX && run_of[k - 1] != usize::MAX && run_of[k] != run_of[k - 1] {
            out[k] = None;
            run_of[k] = usize::MAX;
        }
    }

    let mut cursor = 0;
    let samples: Vec<PenSample> = out
        .into_iter()
        .enumerate()
        .map(|(k, s)| {
            s.unwrap_or_else(|| {
                let t = grid_t(k);
                let (x, y, _, azimuth, altitude) = interpolate(&rec.samples, &mut cursor, t + origin);
                PenSample { t, x, y, p: 0.0, pen_state: PenState::Up, azimuth, altitude }
            })
        })
        .collect();

    let filter = LowPass::new(cutoff, rate);
    let mut samples = samples;
    for (state, range) in pen_runs(&samples) {
        if !state.is_down() {
            continue;
        }
        let xs: Vec<f64> = samples[range.clone()].iter().map(|s| s.x).collect();
        let ys: Vec<f64> = samples[range.clone()].iter().map(|s| s.y).collect();
        let xs = filter.filtfilt(&xs);
        let ys = filter.filtfilt(&ys);
        for (i, s) in samples[range].iter_mut().enumerate() {
            s.x = xs[i];
            s.y = ys[i];
        }
    }

    TaskRecording::new(rec.subject_id.clone(), rec.group, rec.task, rate, samples)
}
