use serde::{Deserialize, Serialize};

use super::kinematics::{kinematic_derivatives, KinematicProfiles};
use super::preprocess::pen_runs;
use super::recording::{PenSample, TaskId, TaskRecording};
use crate::error::{Error, Result};

/// Shortest pen-down run kept as a stroke (≈55 ms at 180 Hz).
pub const DEFAULT_MIN_STROKE_SAMPLES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stroke {
    pub task: TaskId,
    pub index: usize,
    /// Index of the first sample in the parent recording.
    pub start: usize,
    pub samples: Vec<PenSample>,
    pub profiles: KinematicProfiles,
}

impl Stroke {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn speed(&self) -> &[f64] {
        &self.profiles.speed
    }

    pub fn xs(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.x).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.y).collect()
    }

    pub fn pressures(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.p).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub strokes: Vec<Stroke>,
    /// Pen-down runs shorter than the minimum length.
    pub discarded_runs: usize,
}

/// Splits a preprocessed recording into pen-down strokes.
pub fn segment_strokes(rec: &TaskRecording, min_stroke_samples: usize) -> Result<Segmentation> {
    let min_len = min_stroke_samples.max(super::kinematics::MIN_DERIVATIVE_SAMPLES);
    let dt = 1.0 / rec.sample_rate_hz;
    let mut strokes = Vec::new();
    let mut discarded_runs = 0;
    for (state, range) in pen_runs(&rec.samples) {
        if !state.is_down() {
            continue;
        }
        if range.len() < min_len {
            discarded_runs += 1;
            continue;
        }
        let samples = rec.samples[range.clone()].to_vec();
        let x: Vec<f64> = samples.iter().map(|s| s.x).collect();
        let y: Vec<f64> = samples.iter().map(|s| s.y).collect();
        let profiles = kinematic_derivatives(&x, &y, dt)?;
        strokes.push(Stroke { task: rec.task, index: strokes.len(), start: range.start, samples, profiles });
    }
    if strokes.is_empty() {
        return Err(Error::NoStrokes);
    }
    Ok(Segmentation { strokes, discarded_runs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::recording::{Group, PenSample, PenState};

    fn rec_from_states(states: &[PenState]) -> TaskRecording {
        let samples = states
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let t = i as f64 / 180.0;
                match s {
                    PenState::Down => PenSample::down(t, i as f64, 0.0, 0.5),
                    PenState::Up => PenSample::up(t, i as f64, 0.0),
                }
            })
            .collect();
        TaskRecording::new("s", Group::PD, TaskId::Name, 180.0, samples).unwrap()
    }

    #[test]
    fn splits_on_pen_up() {
        use PenState::*;
        let mut states = vec![Down; 4];
        states.push(Up);
        states.extend([Down; 4]);
        let seg = segment_strokes(&rec_from_states(&states), 2).unwrap();
        assert_eq!(seg.strokes.len(), 2);
        assert_eq!(seg.strokes[0].len(), 4);
        assert_eq!(seg.strokes[1].start, 5);
    }

    #[test]
    fn all_down_is_one_stroke() {
        let seg = segment_strokes(&rec_from_states(&[PenState::Down; 30]), 10).unwrap();
        assert_eq!(seg.strokes.len(), 1);
        assert_eq!(seg.strokes[0].len(), 30);
    }

    #[test]
    fn short_runs_discarded_and_counted() {
        use PenState::*;
        let mut states = vec![Down; 3];
        states.push(Up);
        states.extend([Down; 12]);
        let seg = segment_strokes(&rec_from_states(&states), 10).unwrap();
        assert_eq!(seg.strokes.len(), 1);
        assert_eq!(seg.discarded_runs, 1);
    }

    #[test]
    fn no_strokes() {
        use PenState::*;
        let states = [Down, Down, Down, Up, Up];
        assert_eq!(segment_strokes(&rec_from_states(&states), 10).unwrap_err(), Error::NoStrokes);
    }
}
