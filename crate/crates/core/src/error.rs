use thiserror::Error;

/// Every failure the pipeline can report. Variant names double as the
/// module error names printed by the CLI.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    // recordings
    #[error("malformed row {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("timestamps not strictly increasing at row {line}")]
    NonMonotonicTime { line: usize },
    #[error("recording contains no samples")]
    EmptyRecording,
    #[error("recording has no pen-down samples")]
    NoPenDown,
    #[error("no pen-down run has at least 4 samples")]
    DegenerateRecording,
    #[error("invalid preprocessing parameters: {0}")]
    InvalidRate(String),
    #[error("no pen-down run reaches the minimum stroke length")]
    NoStrokes,
    #[error("stroke too short: {len} samples, need {min}")]
    TooShort { len: usize, min: usize },

    // nonlinear
    #[error("series too short: {len} samples, need {min}")]
    SeriesTooShort { len: usize, min: usize },
    #[error("series has zero variance")]
    SeriesDegenerate,
    #[error("invalid embedding parameters: {0}")]
    InvalidEmbedding(String),
    #[error("too few phase points: {len}, need {min}")]
    TooFewPoints { len: usize, min: usize },
    #[error("no scaling region with R^2 >= 0.9")]
    NoScalingRegion,
    #[error("zero variance in every analysis window")]
    ZeroVariance,
    #[error("signal is identically zero")]
    SilentSignal,

    // neuromotor
    #[error("invalid lognormal parameters: {0}")]
    InvalidParams(String),
    #[error("speed profile has no positive peak")]
    NoPeak,
    #[error("no lognormal fits to summarize")]
    EmptyFit,

    // features
    #[error("empty input")]
    EmptyInput,
    #[error("manifest mismatch: {0}")]
    ManifestMismatch(String),
    #[error("need at least {min} rows, got {len}")]
    TooFewRows { len: usize, min: usize },

    // classification
    #[error("training data contains a single class")]
    SingleClass,
    #[error("non-finite feature value at row {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid classifier parameters: {0}")]
    InvalidClassifierParams(String),

    // evaluation
    #[error("subject {0} has no Circle recording")]
    MissingTask(String),
    #[error("no scores for subject {0}")]
    NoScores(String),

    // synthesis / io
    #[error("invalid subject profile: {0}")]
    InvalidProfile(String),
    #[error("io failure: {0}")]
    IoFailure(String),
    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    /// Stable variant name, e.g. `NoStrokes`.
    pub fn name(&self) -> &'static str {
        match self {
            Error::MalformedRow { .. } => "MalformedRow",
            Error::NonMonotonicTime { .. } => "NonMonotonicTime",
            Error::EmptyRecording => "EmptyRecording",
            Error::NoPenDown => "NoPenDown",
            Error::DegenerateRecording => "DegenerateRecording",
            Error::InvalidRate(_) => "InvalidRate",
            Error::NoStrokes => "NoStrokes",
            Error::TooShort { .. } => "TooShort",
            Error::SeriesTooShort { .. } => "SeriesTooShort",
            Error::SeriesDegenerate => "SeriesDegenerate",
            Error::InvalidEmbedding(_) => "InvalidEmbedding",
            Error::TooFewPoints { .. } => "TooFewPoints",
            Error::NoScalingRegion => "NoScalingRegion",
            Error::ZeroVariance => "ZeroVariance",
            Error::SilentSignal => "SilentSignal",
            Error::InvalidParams(_) => "InvalidParams",
            Error::NoPeak => "NoPeak",
            Error::EmptyFit => "EmptyFit",
            Error::EmptyInput => "EmptyInput",
            Error::ManifestMismatch(_) => "ManifestMismatch",
            Error::TooFewRows { .. } => "TooFewRows",
            Error::SingleClass => "SingleClass",
            Error::NonFiniteFeature { .. } => "NonFiniteFeature",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::InvalidClassifierParams(_) => "InvalidClassifierParams",
            Error::MissingTask(_) => "MissingTask",
            Error::NoScores(_) => "NoScores",
            Error::InvalidProfile(_) => "InvalidProfile",
            Error::IoFailure(_) => "IoFailure",
            Error::Format(_) => "Format",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::IoFailure(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
