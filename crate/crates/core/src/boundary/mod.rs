//! Pupillary refinement and limbic boundary localization.

pub mod fit;
pub mod limbic;
pub mod orientation;
pub mod pipeline;
pub mod scan;
pub mod zones;

pub use fit::{angular_span, fit_circle, fit_points, fit_with_refit};
pub use limbic::{locate_limbic, locate_limbic_from, occlusion_mask, refine_pupil, AngleRun, AngleSet, LimbicBoundary, RefinedPupil};
pub use orientation::{eye_orientation, moment_orientation, Orientation};
pub use pipeline::{segment, segment_traced, ResultRecord, SegmentationResult, StageTimings, Trace, STAGES};
pub use scan::{radial_scan, ray_angle, ray_hits, RadialProfile, RaySample};
pub use zones::{partition_zones, Sector, Zone, ZonePartition};
