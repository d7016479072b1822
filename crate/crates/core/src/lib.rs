//! Two-stage iris localization.
//!
//! Stage one finds the pupil as a dark blob: the opened image is quantized
//! into three levels, filtered with a scale-normalized Laplacian of Gaussian
//! tuned to the expected pupil radius, and the strongest response seeds a
//! region grow. Stage two refines the pupillary boundary and finds the limbic
//! boundary from fine-scale LoG zero crossings, scanning the stable zones
//! beside the pupil first and then the eyelid zones, where gaps mark
//! occlusion.
//!
//! The [`eval`] module scores results against ground-truth masks and renders
//! synthetic eyes with known geometry for desk-scale testing.

// `!(a < b)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod cli;
pub mod config;
pub mod edges;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod imgcore;
pub mod labeling;
pub mod overlay;
pub mod pupil;

pub use boundary::{segment, SegmentationResult};
pub use config::{BoundaryParams, EdgeParams, PipelineParams, PupilParams};
pub use error::{Error, Result, SegmentError, Stage};
pub use geometry::Circle;
pub use imgcore::{EdgeMap, Field, GrayImage, Mask};
