//! Pipeline parameters and their flat `key = value` file format.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stage-1 parameters: tri-level thresholds, coarse LoG scale, seed mask
/// threshold, region-growing tolerance and opening radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PupilParams {
    pub t1: f64,
    pub t2: f64,
    /// Expected pupil radius in pixels, also the coarse LoG scale.
    pub r_avg: f64,
    pub lambda_a: f64,
    #[serde(rename = "grow_tol")]
    pub grow_tolerance: f64,
    pub open_radius: usize,
    /// Radius of the median pre-filter applied before opening; 0 disables it.
    pub median_radius: usize,
}

impl PupilParams {
    /// Defaults for everything except the database-specific pupil radius.
    pub fn with_r_avg(r_avg: f64) -> Self {
        PupilParams {
            t1: 0.2,
            t2: 0.5,
            r_avg,
            lambda_a: 0.6,
            grow_tolerance: 0.05,
            open_radius: 5,
            median_radius: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.t1 && self.t1 < self.t2 && self.t2 < 1.0) {
            return Err(Error::param("t1/t2", format!("need 0 < t1 < t2 < 1, got t1={} t2={}", self.t1, self.t2)));
        }
        if !(self.r_avg >= 2.0 && self.r_avg.is_finite()) {
            return Err(Error::param("r_avg", format!("must be >= 2, got {}", self.r_avg)));
        }
        if !(0.5 < self.lambda_a && self.lambda_a < 1.0) {
            return Err(Error::param("lambda_a", format!("must lie in (0.5, 1), got {}", self.lambda_a)));
        }
        if !(0.0 < self.grow_tolerance && self.grow_tolerance < 1.0) {
            return Err(Error::param("grow_tol", format!("must lie in (0, 1), got {}", self.grow_tolerance)));
        }
        if self.open_radius == 0 {
            return Err(Error::param("open_radius", "must be >= 1"));
        }
        if self.median_radius > 5 {
            return Err(Error::param("median_radius", "must be <= 5"));
        }
        Ok(())
    }
}

/// Zero-crossing detector parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeParams {
    pub sigma_zc: f64,
    pub lambda_c: f64,
    pub min_component: usize,
}

impl Default for EdgeParams {
    fn default() -> Self {
        EdgeParams {
            sigma_zc: 2.0,
            lambda_c: 0.15,
            min_component: 50,
        }
    }
}

impl EdgeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_zc > 0.0 && self.sigma_zc.is_finite()) {
            return Err(Error::param("sigma_zc", format!("must be > 0, got {}", self.sigma_zc)));
        }
        if !(self.lambda_c >= 0.0 && self.lambda_c.is_finite()) {
            return Err(Error::param("lambda_c", format!("must be >= 0, got {}", self.lambda_c)));
        }
        if self.min_component == 0 {
            return Err(Error::param("min_component", "must be >= 1"));
        }
        Ok(())
    }
}

/// Radial scanning, zone partition and circle-fitting parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryParams {
    pub n_angles: usize,
    pub radial_step: f64,
    /// Half-width of each stable sector around the eye axis, radians.
    pub stable_halfwidth: f64,
    /// Residual bound for the inlier re-fit, pixels.
    pub inlier_tol: f64,
    /// Limbic search interval as multiples of the pupil radius.
    pub limbic_min: f64,
    pub limbic_max: f64,
    /// Stable-zone hits closer than this to the pupillary circle are ignored.
    pub pupil_exclusion: f64,
    /// Occlusion-zone search band as a fraction of the stable iris radius.
    pub occlusion_band: f64,
    /// Occlusion-zone hits must lie within this many pixels of the circle
    /// fitted to the stable zones.
    pub continuity_tol: f64,
    /// Runs of at most this many visible rays between gaps are marked as gaps.
    pub gap_fill: usize,
    /// Gap runs of at most this many rays are discarded.
    pub min_gap_run: usize,
    /// Fraction trimmed from each end before averaging stable-zone radii.
    pub stable_trim: f64,
    /// Minimum fraction of stable-zone rays that must hit.
    pub min_stable_coverage: f64,
}

impl Default for BoundaryParams {
    fn default() -> Self {
        BoundaryParams {
            n_angles: 360,
            radial_step: 0.5,
            stable_halfwidth: PI / 6.0,
            inlier_tol: 2.0,
            limbic_min: 1.2,
            limbic_max: 4.0,
            pupil_exclusion: 3.0,
            occlusion_band: 0.15,
            continuity_tol: 2.0,
            gap_fill: 5,
            min_gap_run: 4,
            stable_trim: 0.1,
            min_stable_coverage: 0.25,
        }
    }
}

impl BoundaryParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_angles < 8 {
            return Err(Error::param("n_angles", "must be >= 8"));
        }
        if !(self.radial_step > 0.0) {
            return Err(Error::param("radial_step", "must be > 0"));
        }
        if !(0.0 < self.stable_halfwidth && self.stable_halfwidth < PI / 4.0) {
            return Err(Error::param(
                "stable_halfwidth",
                format!("must lie in (0, pi/4), got {}", self.stable_halfwidth),
            ));
        }
        if !(self.inlier_tol > 0.0) {
            return Err(Error::param("inlier_tol", "must be > 0"));
        }
        if !(1.0 <= self.limbic_min && self.limbic_min < self.limbic_max) {
            return Err(Error::param("limbic_min/limbic_max", "need 1 <= limbic_min < limbic_max"));
        }
        if !(self.pupil_exclusion >= 0.0) {
            return Err(Error::param("pupil_exclusion", "must be >= 0"));
        }
        if !(0.0 < self.occlusion_band && self.occlusion_band < 1.0) {
            return Err(Error::param("occlusion_band", "must lie in (0, 1)"));
        }
        if !(self.continuity_tol > 0.0) {
            return Err(Error::param("continuity_tol", "must be > 0"));
        }
        if !(0.0 <= self.stable_trim && self.stable_trim < 0.5) {
            return Err(Error::param("stable_trim", "must lie in [0, 0.5)"));
        }
        if !(0.0 < self.min_stable_coverage && self.min_stable_coverage <= 1.0) {
            return Err(Error::param("min_stable_coverage", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Every tunable of the segmentation pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    #[serde(flatten)]
    pub pupil: PupilParams,
    #[serde(flatten)]
    pub edges: EdgeParams,
    #[serde(flatten)]
    pub boundary: BoundaryParams,
}

impl PipelineParams {
    pub fn with_r_avg(r_avg: f64) -> Self {
        PipelineParams {
            pupil: PupilParams::with_r_avg(r_avg),
            edges: EdgeParams::default(),
            boundary: BoundaryParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.pupil.validate()?;
        self.edges.validate()?;
        self.boundary.validate()
    }

    /// Flat `key = value` rendering, one parameter per line.
    pub fn to_flat_string(&self) -> String {
        toml::to_string(self).expect("flat parameter table always serializes")
    }

    /// Parses a complete flat table.
    pub fn from_flat_str(text: &str) -> Result<Self> {
        let params = Self::from_table(parse_known(text)?)?;
        params.validate()?;
        Ok(params)
    }

    /// Replaces the parameters named in `text` and keeps the rest. The
    /// result is not validated.
    pub fn overlay_flat_str(&self, text: &str) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(&self.to_flat_string()).expect("own rendering parses");
        table.extend(parse_known(text)?);
        Self::from_table(table)
    }

    fn from_table(table: toml::Table) -> Result<Self> {
        table
            .try_into()
            .map_err(|e: toml::de::Error| Error::param("config", e.message().to_string()))
    }
}

fn parse_known(text: &str) -> Result<toml::Table> {
    let table: toml::Table = toml::from_str(text).map_err(|e| Error::param("config", e.message().to_string()))?;
    let known: toml::Table =
        toml::from_str(&PipelineParams::with_r_avg(2.0).to_flat_string()).expect("default table parses");
    if let Some(key) = table.keys().find(|k| !known.contains_key(*k)) {
        return Err(Error::param("config", format!("unknown key `{key}`")));
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_round_trip() {
        let mut p = PipelineParams::with_r_avg(23.5);
        p.edges.lambda_c = 0.1;
        p.boundary.stable_halfwidth = 0.4;
        let text = p.to_flat_string();
        assert!(text.contains("t1 = 0.2"));
        assert!(text.contains("grow_tol = 0.05"));
        assert!(!text.contains('['), "config must be a flat table:\n{text}");
        assert_eq!(PipelineParams::from_flat_str(&text).unwrap(), p);
    }

    #[test]
    fn validation() {
        let mut p = PipelineParams::with_r_avg(20.0);
        p.validate().unwrap();
        p.pupil.t1 = 0.6;
        assert!(p.validate().is_err());
        let mut p = PipelineParams::with_r_avg(1.0);
        assert!(p.validate().is_err());
        p.pupil.r_avg = 10.0;
        p.boundary.stable_halfwidth = 1.0;
        assert!(p.validate().is_err());
        let mut p = PipelineParams::with_r_avg(10.0);
        p.edges.min_component = 0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn missing_or_unknown_keys_rejected() {
        assert!(PipelineParams::from_flat_str("t1 = 0.2").is_err());
        let mut text = PipelineParams::with_r_avg(20.0).to_flat_string();
        text.push_str("bogus = 1\n");
        assert!(PipelineParams::from_flat_str(&text).is_err());
    }

    #[test]
    fn overlay_replaces_named_keys() {
        let base = PipelineParams::with_r_avg(20.0);
        let p = base.overlay_flat_str("lambda_c = 0.2\nr_avg = 31.0\n").unwrap();
        assert_eq!(p.edges.lambda_c, 0.2);
        assert_eq!(p.pupil.r_avg, 31.0);
        assert_eq!(p.boundary, base.boundary);
        assert!(base.overlay_flat_str("nope = 2").is_err());
    }
}
