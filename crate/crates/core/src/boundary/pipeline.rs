//! The full two-stage chain.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::limbic::{locate_limbic, occlusion_mask, refine_pupil, AngleRun, AngleSet};
use super::orientation::eye_orientation;
use super::zones::partition_zones;
use crate::config::PipelineParams;
use crate::edges::detect_edges;
use crate::error::{Error, SegmentError, Stage};
use crate::geometry::Circle;
use crate::imgcore::{median_filter, morph_open, EdgeMap, GrayImage, Mask, StructuringElement};
use crate::pupil::{locate_pupil, CoarsePupil};

/// Wall time per stage, milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub preprocess: f64,
    pub pupil: f64,
    pub edges: f64,
    pub pupil_refine: f64,
    pub orientation: f64,
    pub limbic: f64,
    pub occlusion: f64,
}

impl StageTimings {
    pub fn total(&self) -> f64 {
        self.preprocess + self.pupil + self.edges + self.pupil_refine + self.orientation + self.limbic + self.occlusion
    }

    pub fn get(&self, stage: Stage) -> f64 {
        match stage {
            Stage::Preprocess => self.preprocess,
            Stage::Pupil => self.pupil,
            Stage::Edges => self.edges,
            Stage::PupilRefine => self.pupil_refine,
            Stage::Orientation => self.orientation,
            Stage::Limbic => self.limbic,
            Stage::Occlusion => self.occlusion,
        }
    }

    fn slot(&mut self, stage: Stage) -> &mut f64 {
        match stage {
            Stage::Preprocess => &mut self.preprocess,
            Stage::Pupil => &mut self.pupil,
            Stage::Edges => &mut self.edges,
            Stage::PupilRefine => &mut self.pupil_refine,
            Stage::Orientation => &mut self.orientation,
            Stage::Limbic => &mut self.limbic,
            Stage::Occlusion => &mut self.occlusion,
        }
    }
}

pub const STAGES: [Stage; 7] = [
    Stage::Preprocess,
    Stage::Pupil,
    Stage::Edges,
    Stage::PupilRefine,
    Stage::Orientation,
    Stage::Limbic,
    Stage::Occlusion,
];

/// Output of [`segment`].
#[derive(Debug, Clone)]
pub struct SegmentationResult {
    pub width: usize,
    pub height: usize,
    pub coarse_pupil: Circle,
    pub pupil: Circle,
    /// False when zero-crossing refinement failed and the coarse circle was kept.
    pub pupil_refined: bool,
    pub iris: Circle,
    /// Major-axis angle in radians; 0 when the estimate was low-confidence.
    pub orientation: f64,
    pub orientation_low_confidence: bool,
    pub gap_angles: AngleSet,
    pub occlusion: Mask,
    pub timings: StageTimings,
}

/// Intermediate rasters kept for debug output.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub opened: Option<GrayImage>,
    pub coarse: Option<CoarsePupil>,
    pub edges: Option<EdgeMap>,
    pub eye_mask: Option<Mask>,
}

/// Serializable summary of one segmentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub width: usize,
    pub height: usize,
    pub pupil: Circle,
    pub pupil_refined: bool,
    pub iris: Circle,
    pub orientation: f64,
    pub orientation_low_confidence: bool,
    /// Occluded angular runs in degrees, measured from the pupil center.
    pub gap_runs_deg: Vec<(f64, f64)>,
    pub occluded_pixels: usize,
    pub timings_ms: StageTimings,
}

impl SegmentationResult {
    /// Filled annulus between the two circles minus the occlusion mask.
    pub fn detected_iris_mask(&self) -> Mask {
        let mut mask = Mask::from_fn(self.width, self.height, |x, y| {
            let (fx, fy) = (x as f64, y as f64);
            self.iris.contains(fx, fy) && !self.pupil.contains(fx, fy) && !self.occlusion.get(x, y)
        })
        .expect("dimensions from the segmented image");
        if self.iris.r <= self.pupil.r {
            mask = Mask::new(self.width, self.height).expect("non-empty");
        }
        mask
    }

    pub fn gap_runs(&self) -> Vec<AngleRun> {
        self.gap_angles.runs()
    }

    pub fn record(&self) -> ResultRecord {
        ResultRecord {
            width: self.width,
            height: self.height,
            pupil: self.pupil,
            pupil_refined: self.pupil_refined,
            iris: self.iris,
            orientation: self.orientation,
            orientation_low_confidence: self.orientation_low_confidence,
            gap_runs_deg: self
                .gap_runs()
                .iter()
                .map(|r| (r.start.to_degrees(), r.end.to_degrees()))
                .collect(),
            occluded_pixels: self.occlusion.count(),
            timings_ms: self.timings,
        }
    }
}

struct Clock {
    timings: StageTimings,
}

impl Clock {
    fn run<T>(&mut self, stage: Stage, f: impl FnOnce() -> Result<T, Error>) -> Result<T, SegmentError> {
        let start = Instant::now();
        let out = f();
        *self.timings.slot(stage) += start.elapsed().as_secs_f64() * 1e3;
        out.map_err(|e| SegmentError::new(stage, e))
    }
}

/// Segments one eye image.
pub fn segment(img: &GrayImage, params: &PipelineParams) -> Result<SegmentationResult, SegmentError> {
    segment_traced(img, params, None)
}

/// [`segment`], optionally keeping intermediate rasters in `trace`.
pub fn segment_traced(
    img: &GrayImage,
    params: &PipelineParams,
    mut trace: Option<&mut Trace>,
) -> Result<SegmentationResult, SegmentError> {
    params
        .validate()
        .map_err(|e| SegmentError::new(Stage::Preprocess, e))?;
    let mut clock = Clock { timings: StageTimings::default() };

    let opened = clock.run(Stage::Preprocess, || {
        let filtered = median_filter(img, params.pupil.median_radius)?;
        morph_open(&filtered, &StructuringElement::disc(params.pupil.open_radius)?)
    })?;
    if let Some(t) = trace.as_deref_mut() {
        t.opened = Some(opened.clone());
    }
    let coarse = clock.run(Stage::Pupil, || locate_pupil(&opened, &params.pupil))?;
    if let Some(t) = trace.as_deref_mut() {
        t.coarse = Some(coarse.clone());
    }
    let edges = clock.run(Stage::Edges, || detect_edges(&opened, &params.edges))?;
    if let Some(t) = trace.as_deref_mut() {
        t.edges = Some(edges.clone());
    }
    let refined = clock.run(Stage::PupilRefine, || Ok(refine_pupil(&edges, &coarse.circle, &params.boundary)))?;
    let pupil = refined.circle;
    let orientation = clock.run(Stage::Orientation, || eye_orientation(&opened, &pupil, params.pupil.r_avg))?;
    let angle = if orientation.low_confidence { 0.0 } else { orientation.angle };
    if let Some(t) = trace {
        t.eye_mask = Some(orientation.mask.clone());
    }

    let limbic = clock.run(Stage::Limbic, || {
        let zones = partition_zones(angle, params.boundary.stable_halfwidth)?;
        let limbic = locate_limbic(&edges, &pupil, &zones, &params.boundary)?;
        let iris = limbic.iris;
        if !(iris.r > pupil.r) {
            return Err(Error::Inconsistent(format!(
                "iris radius {:.2} not larger than pupil radius {:.2}",
                iris.r, pupil.r
            )));
        }
        if iris.center_distance(&pupil) >= pupil.r {
            return Err(Error::Inconsistent(format!(
                "iris and pupil centers {:.2} px apart, pupil radius {:.2}",
                iris.center_distance(&pupil),
                pupil.r
            )));
        }
        Ok(limbic)
    })?;
    let occlusion = clock.run(Stage::Occlusion, || {
        Ok(occlusion_mask(&edges, &limbic.iris, &pupil, &limbic.gap_angles))
    })?;

    Ok(SegmentationResult {
        width: img.width(),
        height: img.height(),
        coarse_pupil: coarse.circle,
        pupil,
        pupil_refined: refined.refined,
        iris: limbic.iris,
        orientation: angle,
        orientation_low_confidence: orientation.low_confidence,
        gap_angles: limbic.gap_angles,
        occlusion,
        timings: clock.timings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn black_image_fails_at_pupil_stage() {
        let img = GrayImage::filled(160, 120, 0.0).unwrap();
        let err = segment(&img, &PipelineParams::with_r_avg(20.0)).unwrap_err();
        assert_eq!(err.stage, Stage::Pupil);
        assert!(err.to_string().contains("pupil"));
    }

    #[test]
    fn invalid_params_fail_before_work() {
        let img = GrayImage::filled(160, 120, 0.5).unwrap();
        let mut p = PipelineParams::with_r_avg(20.0);
        p.pupil.t1 = 0.9;
        assert_eq!(segment(&img, &p).unwrap_err().stage, Stage::Preprocess);
    }

    #[test]
    fn timings_total_sums_stages() {
        let t = StageTimings {
            preprocess: 1.0,
            pupil: 2.0,
            edges: 3.0,
            pupil_refine: 4.0,
            orientation: 5.0,
            limbic: 6.0,
            occlusion: 7.0,
        };
        assert_eq!(t.total(), 28.0);
        assert_eq!(STAGES.iter().map(|&s| t.get(s)).sum::<f64>(), 28.0);
    }
}
