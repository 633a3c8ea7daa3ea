//! One synthetic task recording from a subject profile.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::profile::SubjectProfile;
use crate::error::{Error, Result};
use crate::neuromotor::LognormalComponent;
use crate::signal::{PenSample, TaskId, TaskRecording, NOMINAL_RATE_HZ};

const SUBSTEPS: usize = 16;
const SIGMA_MEAN: f64 = 0.25;
const LIFT_FRACTION: f64 = 0.1;
const TOUCH_FRACTION: f64 = 0.02;
const CORE_FRACTION: f64 = 0.2;
const AMPLITUDE_RANGE: std::ops::Range<f64> = 0.9..1.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tremor {
    pub amp: f64,
    pub freq: f64,
    pub phase: f64,
}

impl Tremor {
    pub fn eval(&self, t: f64) -> f64 {
        self.amp * (TAU * self.freq * t + self.phase).sin()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrokeTruth {
    pub start_time: f64,
    pub end_time: f64,
    pub path_length: f64,
    pub components: Vec<LognormalComponent>,
    /// Direction of each component in radians.
    pub headings: Vec<f64>,
}

impl StrokeTruth {
    /// Signed speed the generator integrates: lobes plus tremor.
    pub fn emitted_speed(&self, tremor: &Tremor, t: f64) -> f64 {
        self.components.iter().map(|c| c.eval(t)).sum::<f64>() + tremor.eval(t)
    }

    fn heading(&self, t: f64, fallback: f64) -> f64 {
        let (mut sx, mut sy) = (0.0, 0.0);
        for (c, h) in self.components.iter().zip(&self.headings) {
            let w = c.eval(t);
            sx += w * h.cos();
            sy += w * h.sin();
        }
        if sx * sx + sy * sy > 1e-24 {
            sy.atan2(sx)
        } else {
            fallback
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskTruth {
    pub task: TaskId,
    pub tremor: Tremor,
    pub strokes: Vec<StrokeTruth>,
}

/// Direction pattern of a task.
#[derive(Debug, Clone, Copy)]
enum Script {
    /// Headings rotate through `turns` full turns over a stroke.
    Arc { turns: f64 },
    /// Alternating up/down strokes drifting right.
    Loops,
    /// One side per block of components.
    Polygon { sides: usize, rotation: f64 },
    /// Fixed heading sequence.
    Polyline(&'static [f64]),
    /// Random headings biased rightwards.
    Writing,
}

struct TaskPlan {
    strokes: usize,
    /// Stroke duration multiplier.
    length: f64,
    script: Script,
}

const REY: [f64; 8] = [0.0, FRAC_PI_2, PI, -FRAC_PI_2, FRAC_PI_4, -3.0 * FRAC_PI_4, 0.0, -FRAC_PI_4];

fn plan(task: TaskId) -> TaskPlan {
    use TaskId::*;
    let (strokes, length, script) = match task {
        Circle => (5, 1.3, Script::Arc { turns: 1.0 }),
        CircleTemplate => (4, 1.3, Script::Arc { turns: 1.0 }),
        Spiral => (6, 1.5, Script::Arc { turns: 2.0 }),
        SpiralTemplate => (5, 1.5, Script::Arc { turns: 2.0 }),
        Line1 => (5, 1.2, Script::Loops),
        Line2 => (5, 1.2, Script::Loops),
        Rectangles => (4, 1.0, Script::Polygon { sides: 4, rotation: 0.0 }),
        Rhombus => (4, 1.0, Script::Polygon { sides: 4, rotation: FRAC_PI_4 }),
        Cube => (6, 0.9, Script::Polygon { sides: 4, rotation: PI / 6.0 }),
        House => (5, 1.0, Script::Polygon { sides: 5, rotation: FRAC_PI_2 }),
        Rey => (8, 0.9, Script::Polyline(&REY)),
        Alphabet => (8, 0.9, Script::Writing),
        FreeWriting => (8, 1.0, Script::Writing),
        Name => (4, 1.0, Script::Writing),
        Numbers => (6, 0.8, Script::Writing),
        Signature => (3, 1.2, Script::Writing),
        Id => (4, 0.8, Script::Writing),
    };
    TaskPlan { strokes, length, script }
}

fn headings(script: Script, n: usize, stroke: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let base: f64 = rng.gen_range(-0.3..0.3);
    (0..n)
        .map(|j| match script {
            Script::Arc { turns } => base + TAU * turns.min(n as f64 / 3.0) * (j as f64 + 0.5) / n as f64,
            Script::Loops => {
                if j % 2 == 0 {
                    FRAC_PI_2 - 0.4 + base
                } else {
                    -FRAC_PI_2 + 0.4 + base
                }
            }
            Script::Polygon { sides, rotation } => rotation + base + TAU * ((j * sides) / n) as f64 / sides as f64,
            Script::Polyline(h) => h[(stroke + j) % h.len()] + base,
            Script::Writing => rng.gen_range(-1.0..1.0) * 1.8,
        })
        .collect()
}

/// Component count: one plus Poisson(mean − 1), so a mean of 1 is exact.
fn component_count(profile: &SubjectProfile, rng: &mut ChaCha8Rng) -> usize {
    let extra = profile.lognormals_per_stroke - 1.0;
    if extra <= 0.0 {
        return 1;
    }
    1 + Poisson::new(extra).map(|p| p.sample(rng) as usize).unwrap_or(0)
}

/// Lobes of one stroke, peaks spread over the planned duration. The summed
/// speed first reaches `TOUCH_FRACTION` of the largest peak at `start`.
fn stroke_components(
    profile: &SubjectProfile,
    n: usize,
    duration: f64,
    start: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<LognormalComponent>> {
    let slot = duration / n as f64;
    let sigma_dist = Normal::new(SIGMA_MEAN, profile.sigma_jitter.max(1e-12)).map_err(|e| Error::InvalidProfile(e.to_string()))?;
    let v_target = rng.gen_range(45.0..75.0) * profile.speed_scale;
    let mut comps = Vec::with_capacity(n);
    for j in 0..n {
        let sigma: f64 = if profile.sigma_jitter > 0.0 { sigma_dist.sample(rng) } else { SIGMA_MEAN };
        let sigma = sigma.clamp(0.05, 1.0);
        // core width between the ±1σ quantiles: a fifth of the slot, so sub-movements stay distinct
        let core = CORE_FRACTION * slot * rng.gen_range(0.85..1.15);
        let scale = core / (2.0 * sigma.sinh());
        let mu = scale.ln();
        let t_peak = (j as f64 + 0.5 + rng.gen_range(-0.15..0.15)) * slot;
        let t0 = t_peak - (mu - sigma * sigma).exp();
        // D set from a relative peak speed, so shape changes do not create spikes
        let unit = LognormalComponent { d: 1.0, t0, mu, sigma };
        let d = rng.gen_range(AMPLITUDE_RANGE) / unit.peak_speed();
        comps.push(LognormalComponent { d, t0, mu, sigma });
    }
    // the summed profile peaks at the stroke's target speed
    let first = comps.iter().map(|c| c.t0).fold(f64::INFINITY, f64::min);
    let last = comps.iter().map(|c| c.t_peak()).fold(first, f64::max);
    let step = 0.25 / NOMINAL_RATE_HZ;
    let steps = ((last - first) / step).ceil() as usize;
    let sum_max = (0..=steps).map(|i| comps.iter().map(|c| c.eval(first + i as f64 * step)).sum::<f64>()).fold(0.0, f64::max);
    for c in &mut comps {
        c.d *= v_target / sum_max;
    }
    let peak = v_target;
    let mut onset = first;
    while comps.iter().map(|c| c.eval(onset)).sum::<f64>() < TOUCH_FRACTION * peak {
        onset += step;
    }
    for c in &mut comps {
        c.t0 += start - onset;
        c.validate()?;
    }
    Ok(comps)
}

/// Time after the last peak where the lobes fall below `LIFT_FRACTION` of
/// their maximum.
fn stroke_end(comps: &[LognormalComponent], start: f64, dt: f64) -> f64 {
    let last_peak = comps.iter().map(|c| c.t_peak()).fold(start, f64::max);
    let peak: f64 = comps.iter().map(|c| c.peak_speed()).fold(0.0, f64::max);
    let mut t = last_peak;
    while t < last_peak + 3.0 {
        if comps.iter().map(|c| c.eval(t)).sum::<f64>() < LIFT_FRACTION * peak {
            break;
        }
        t += dt;
    }
    t
}

/// Generates one task. Pen-down samples follow the integrated lobe speed;
/// pen-up gaps move in a straight line to the next stroke.
pub fn synth_task(profile: &SubjectProfile, subject_id: &str, task: TaskId, rng: &mut ChaCha8Rng) -> Result<(TaskRecording, TaskTruth)> {
    synth_task_with(profile, subject_id, task, None, rng)
}

/// As [`synth_task`], optionally overriding the task's stroke count.
pub fn synth_task_with(
    profile: &SubjectProfile,
    subject_id: &str,
    task: TaskId,
    strokes_override: Option<usize>,
    rng: &mut ChaCha8Rng,
) -> Result<(TaskRecording, TaskTruth)> {
    profile.validate()?;
    let plan = plan(task);
    let n_strokes = strokes_override.unwrap_or(plan.strokes).max(1);
    let dt = 1.0 / NOMINAL_RATE_HZ;
    let tremor = Tremor { amp: profile.tremor_amp, freq: profile.tremor_freq, phase: rng.gen_range(0.0..TAU) };
    let mut samples: Vec<PenSample> = Vec::new();
    let mut truth = Vec::with_capacity(n_strokes);
    let mut k: usize = 0; // global sample index
    let (mut x, mut y) = (rng.gen_range(20.0..40.0), rng.gen_range(40.0..60.0));
    let pressure_base = rng.gen_range(0.4..0.8);
    for s in 0..n_strokes {
        let n = component_count(profile, rng);
        let duration = rng.gen_range(0.9..1.3) * plan.length / profile.speed_scale;
        // touch-down half a sample before the first pen-down sample
        let start_k = k;
        let start = start_k as f64 * dt;
        let comps = stroke_components(profile, n, duration, start - 0.5 * dt, rng)?;
        let heads = headings(plan.script, n, s, rng);
        let mut stroke = StrokeTruth { start_time: start, end_time: start, path_length: 0.0, components: comps, headings: heads };
        let end = stroke_end(&stroke.components, start, dt);
        let end_k = ((end / dt).ceil() as usize).max(start_k + 12);
        let mut heading = stroke.headings[0];
        let te = end_k as f64 * dt;
        for kk in start_k..=end_k {
            let t = kk as f64 * dt;
            if kk > start_k {
                // midpoint substeps over the previous interval
                let h = dt / SUBSTEPS as f64;
                for q in 0..SUBSTEPS {
                    let tm = t - dt + (q as f64 + 0.5) * h;
                    heading = stroke.heading(tm, heading);
                    let v = stroke.emitted_speed(&tremor, tm);
                    x += v * heading.cos() * h;
                    y += v * heading.sin() * h;
                    stroke.path_length += v.abs() * h;
                }
            }
            let ramp = (1.0 - (-(t - start) / 0.04).exp()) * (1.0 - (-(te - t) / 0.04).exp());
            let p = (pressure_base * ramp + 0.03 * (TAU * 1.1 * t).sin()).clamp(0.02, 1.0);
            samples.push(PenSample::down(t, x, y, p));
        }
        stroke.end_time = te;
        truth.push(stroke);
        k = end_k + 1;
        if s + 1 < n_strokes {
            let gap = rng.gen_range(0.2..0.45) * profile.pause_scale;
            let steps = ((gap / dt).round() as usize).max(2);
            let (nx, ny) = match plan.script {
                Script::Writing | Script::Loops => (x + rng.gen_range(3.0..8.0), y + rng.gen_range(-3.0..3.0)),
                _ => (x + rng.gen_range(-10.0..10.0), y + rng.gen_range(-10.0..10.0)),
            };
            for q in 0..steps {
                let f = (q + 1) as f64 / (steps + 1) as f64;
                samples.push(PenSample::up((k + q) as f64 * dt, x + f * (nx - x), y + f * (ny - y)));
            }
            k += steps;
            x = nx;
            y = ny;
        }
    }
    let profile_group = profile.group;
    let rec = TaskRecording::new(subject_id, profile_group, task, NOMINAL_RATE_HZ, samples)?;
    Ok((rec, TaskTruth { task, tremor, strokes: truth }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuromotor::{extract_sigma_lognormal, SigmaLognormalConfig};
    use crate::signal::{kinematic_derivatives, Group};
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn single_lobe_round_trip() {
        let profile = SubjectProfile { tremor_amp: 0.0, lognormals_per_stroke: 1.0, ..SubjectProfile::for_group(Group::YHC) };
        for seed in 0..10 {
            let (rec, truth) = synth_task_with(&profile, "s", TaskId::Circle, Some(1), &mut rng(seed)).unwrap();
            assert_eq!(truth.strokes.len(), 1);
            let gt = truth.strokes[0].components[0];
            let xs: Vec<f64> = rec.samples.iter().map(|s| s.x).collect();
            let ys: Vec<f64> = rec.samples.iter().map(|s| s.y).collect();
            let times: Vec<f64> = rec.samples.iter().map(|s| s.t).collect();
            let speed = kinematic_derivatives(&xs, &ys, 1.0 / NOMINAL_RATE_HZ).unwrap().speed;
            let fit = extract_sigma_lognormal(&times, &speed, &SigmaLognormalConfig::default()).unwrap();
            assert_eq!(fit.components.len(), 1, "seed {seed}");
            let c = fit.components[0];
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
            assert!(rel(c.d, gt.d) < 0.02, "D {} vs {}", c.d, gt.d);
            assert!(rel(c.sigma, gt.sigma) < 0.02, "sigma {} vs {}", c.sigma, gt.sigma);
            // μ is a log time scale: 2% on e^μ
            assert!(rel(c.mu.exp(), gt.mu.exp()) < 0.02, "mu {} vs {}", c.mu, gt.mu);
            assert!((c.t0 - gt.t0).abs() < 0.005);
        }
    }

    #[test]
    fn emitted_speed_matches_lobes_plus_tremor() {
        let profile = SubjectProfile::for_group(Group::PD);
        let (rec, truth) = synth_task(&profile, "s", TaskId::Spiral, &mut rng(5)).unwrap();
        for st in &truth.strokes {
            for s in rec.samples.iter().filter(|s| s.t >= st.start_time && s.t <= st.end_time) {
                let lobes: f64 = crate::neuromotor::reconstruct(&st.components, &[s.t])[0];
                let expect = lobes + truth.tremor.eval(s.t);
                let got = st.emitted_speed(&truth.tremor, s.t);
                assert!((got - expect).abs() <= 1e-6 * expect.abs().max(1e-9));
            }
        }
    }

    #[test]
    fn deterministic() {
        let p = SubjectProfile::for_group(Group::EHC);
        let a = synth_task(&p, "s", TaskId::House, &mut rng(9)).unwrap();
        let b = synth_task(&p, "s", TaskId::House, &mut rng(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn structure() {
        let p = SubjectProfile::for_group(Group::YHC);
        let (rec, truth) = synth_task(&p, "s", TaskId::Rey, &mut rng(1)).unwrap();
        assert_eq!(truth.strokes.len(), 8);
        let runs = rec.samples.windows(2).filter(|w| w[0].pen_state != w[1].pen_state).count();
        assert_eq!(runs, 2 * 7);
        assert!(rec.samples.iter().all(|s| s.pen_state.is_down() || s.p == 0.0));
        assert!(rec.samples.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn invalid_profile() {
        let p = SubjectProfile { tremor_freq: 1.0, ..SubjectProfile::for_group(Group::PD) };
        assert!(matches!(synth_task(&p, "s", TaskId::Circle, &mut rng(0)), Err(Error::InvalidProfile(_))));
    }
}
