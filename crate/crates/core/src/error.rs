use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported or undecodable raster {path}: {reason}")]
    Decode { path: PathBuf, reason: String },
    #[error("failed to encode {path}: {reason}")]
    Encode { path: PathBuf, reason: String },
    #[error("image has a zero dimension ({width}x{height})")]
    EmptyImage { width: usize, height: usize },
    #[error("raster data length {len} does not match {width}x{height}")]
    DataLength { width: usize, height: usize, len: usize },
    #[error("sample {value} at index {index} is outside [0, 1]")]
    SampleOutOfRange { index: usize, value: f64 },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("{what} ({size} px) does not fit a {width}x{height} image")]
    TooLarge {
        what: &'static str,
        size: usize,
        width: usize,
        height: usize,
    },
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("point ({x:.2}, {y:.2}) lies outside the image")]
    OutsideImage { x: f64, y: f64 },
    #[error("no pupil candidate")]
    NoPupilCandidate,
    #[error("pupil not found: grown region has {area} px (need at least {min})")]
    PupilNotFound { area: usize, min: usize },
    #[error("boundary not recoverable: {0}")]
    BoundaryNotRecoverable(String),
    #[error("limbic boundary not found: stable-zone coverage {coverage:.1}% is below {required:.1}%")]
    LimbicNotFound { coverage: f64, required: f64 },
    #[error("inconsistent circles: {0}")]
    Inconsistent(String),
    #[error("{0}")]
    Corpus(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

/// Pipeline stage a segmentation failure is attributed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Preprocess,
    Pupil,
    Edges,
    PupilRefine,
    Orientation,
    Limbic,
    Occlusion,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Preprocess => "preprocess",
            Stage::Pupil => "pupil",
            Stage::Edges => "edges",
            Stage::PupilRefine => "pupil_refine",
            Stage::Orientation => "orientation",
            Stage::Limbic => "limbic",
            Stage::Occlusion => "occlusion",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A segmentation failure together with the stage that raised it.
#[derive(Debug, Error)]
#[error("{stage} stage failed: {source}")]
pub struct SegmentError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

impl SegmentError {
    pub fn new(stage: Stage, source: Error) -> Self {
        SegmentError { stage, source }
    }
}
