//! Statistical functionals, the feature manifest, per-task vector assembly
//! and train-only standardization.

pub mod assembly;
pub mod batch;
pub mod functionals;
pub mod manifest;
pub mod matrix;
pub mod standardize;

pub use assembly::{assemble_task_vector, extract_task_features, FeatureConfig, FeatureVector};
pub use batch::{extract_dataset, DatasetFeatures, ExtractionFailure};
pub use functionals::{functionals, FunctionalSet};
pub use manifest::{FeatureFamily, FeatureManifest, FeatureSelection, ManifestConfig, ManifestEntry};
pub use matrix::{read_matrix_csv, write_matrix_csv};
pub use standardize::StandardizationParams;
