//! Handwriting biomarkers for Parkinson's disease screening.

pub mod classify;
pub mod error;
pub mod eval;
pub mod features;
pub mod kinematic;
pub mod neuromotor;
pub mod nonlinear;
pub mod signal;
pub mod synth;

pub use error::{Error, Result};
