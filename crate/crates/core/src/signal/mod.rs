//! Tablet recordings: parsing, resampling, smoothing, stroke segmentation and
//! derivative profiles.

pub mod dataset;
pub mod filter;
pub mod kinematics;
pub mod preprocess;
pub mod recording;
pub mod strokes;

pub use dataset::{load_recording, read_dataset_manifest, write_dataset_manifest, DatasetEntry, Sex};
pub use filter::{lowpass_zero_phase, LowPass};
pub use kinematics::{gradient, kinematic_derivatives, KinematicProfiles};
pub use preprocess::{preprocess, PreprocessConfig, DEFAULT_CUTOFF_HZ};
pub use recording::{
    parse_recording, write_recording, Group, ParseWarnings, PenSample, PenState, RecordingMeta, TaskId, TaskRecording, NOMINAL_RATE_HZ,
};
pub use strokes::{segment_strokes, Segmentation, Stroke, DEFAULT_MIN_STROKE_SAMPLES};
