//! Corpus iteration: synthetic plans and image directories.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{accuracy_error, EvalRecord, EvalReport, GeometryError};
use super::synth::{generate_eye, lower_lid, upper_lid, Levels, Noise, NoiseKind, Reflections, SyntheticEye, SyntheticEyeSpec};
use crate::boundary::segment;
use crate::config::PipelineParams;
use crate::error::{Error, Result};
use crate::geometry::Circle;
use crate::imgcore::{load_image, load_mask, GrayImage, Mask};

/// Minimum gap between the limbus and the image border, pixels.
pub const BORDER_MARGIN: f64 = 8.0;

/// Flat description of a synthetic corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthPlan {
    pub count: usize,
    pub width: usize,
    pub height: usize,
    pub pupil_min: f64,
    pub pupil_max: f64,
    pub iris_min: f64,
    pub iris_max: f64,
    /// Upper bound on iris radius over pupil radius.
    pub max_ratio: f64,
    /// Largest pupil center offset from the iris center, pixels.
    pub pupil_offset: f64,
    /// Largest tilt of the eye axis, radians.
    pub max_tilt: f64,
    /// Noise kind name, or "none".
    pub noise: String,
    pub strength: f64,
    /// Upper lid coverage, degrees of limbus; 0 disables the lid.
    pub upper_span_min: f64,
    pub upper_span_max: f64,
    /// Lower lid coverage, degrees of limbus; 0 disables the lid.
    pub lower_span_max: f64,
    pub lid_depth_min: f64,
    pub lid_depth_max: f64,
    pub lash_width: f64,
    pub pupil_level: f64,
    pub iris_level: f64,
    pub sclera_level: f64,
    pub skin_level: f64,
    pub lash_level: f64,
    pub reflections: usize,
    pub reflection_radius: f64,
    pub seed: u64,
}

impl Default for SynthPlan {
    fn default() -> Self {
        let levels = Levels::default();
        SynthPlan {
            count: 100,
            width: 320,
            height: 240,
            pupil_min: 18.0,
            pupil_max: 35.0,
            iris_min: 50.0,
            iris_max: 90.0,
            max_ratio: 3.5,
            pupil_offset: 2.0,
            max_tilt: 0.2,
            noise: "none".into(),
            strength: 0.0,
            upper_span_min: 0.0,
            upper_span_max: 0.0,
            lower_span_max: 0.0,
            lid_depth_min: 0.75,
            lid_depth_max: 1.0,
            lash_width: 0.0,
            pupil_level: levels.pupil,
            iris_level: levels.iris,
            sclera_level: levels.sclera,
            skin_level: levels.skin,
            lash_level: levels.lashes,
            reflections: 0,
            reflection_radius: 3.0,
            seed: 1,
        }
    }
}

impl SynthPlan {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let plan: SynthPlan = toml::from_str(text).map_err(|e| Error::Corpus(format!("synthetic plan: {e}")))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("plan always serializes")
    }

    fn noise_spec(&self) -> Result<Option<Noise>> {
        if self.noise == "none" || self.strength == 0.0 {
            return Ok(None);
        }
        let kind: NoiseKind = self.noise.parse()?;
        Ok(Some(Noise { kind, strength: self.strength }))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Err(Error::param("synthetic plan", reason.to_string()));
        if self.count == 0 {
            return bad("count must be >= 1");
        }
        if !(0.0 < self.pupil_min && self.pupil_min <= self.pupil_max) {
            return bad("need 0 < pupil_min <= pupil_max");
        }
        if !(self.iris_min <= self.iris_max) {
            return bad("need iris_min <= iris_max");
        }
        if self.iris_max * 2.0 + 2.0 * BORDER_MARGIN + 1.0 > self.width.min(self.height) as f64 {
            return bad("iris_max does not fit the image");
        }
        if self.pupil_min * (1.0 + 1e-9) >= self.iris_max.min(self.pupil_min * self.max_ratio) {
            return bad("no iris radius satisfies both the range and max_ratio");
        }
        if !(self.upper_span_min <= self.upper_span_max && self.upper_span_max < 180.0 && self.lower_span_max < 180.0) {
            return bad("lid spans must satisfy min <= max < 180");
        }
        if !(0.0 <= self.lid_depth_min && self.lid_depth_min <= self.lid_depth_max && self.lid_depth_max <= 1.0) {
            return bad("need 0 <= lid_depth_min <= lid_depth_max <= 1");
        }
        self.noise_spec()?;
        Ok(())
    }

    pub fn mean_pupil_radius(&self) -> f64 {
        (self.pupil_min + self.pupil_max) / 2.0
    }

    /// Coarse LoG scale suited to the plan: the scale-normalized LoG
    /// response of a disc of radius `R` peaks at `R / sqrt(2)`.
    pub fn suggested_r_avg(&self) -> f64 {
        (self.mean_pupil_radius() / std::f64::consts::SQRT_2).max(2.0)
    }

    /// Draws the geometry of image `index`. Each image has its own stream
    /// so a spec does not depend on how many others were drawn.
    pub fn spec(&self, index: usize) -> Result<SyntheticEyeSpec> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        let mut uniform = |lo: f64, hi: f64| if hi > lo { rng.random_range(lo..=hi) } else { lo };
        let rp = uniform(self.pupil_min, self.pupil_max);
        let ri_lo = self.iris_min.max(rp + self.pupil_offset + 5.0);
        let ri = uniform(ri_lo, self.iris_max.min(rp * self.max_ratio).max(ri_lo));
        let (w, h) = (self.width as f64, self.height as f64);
        let margin = BORDER_MARGIN;
        let cx = uniform(ri + margin, w - 1.0 - ri - margin);
        let cy = uniform(ri + margin, h - 1.0 - ri - margin);
        let (off, off_angle) = (uniform(0.0, self.pupil_offset), uniform(0.0, std::f64::consts::TAU));
        let tilt = uniform(-self.max_tilt, self.max_tilt);
        let mut eyelids = Vec::new();
        if self.upper_span_max > 0.0 {
            let span = uniform(self.upper_span_min, self.upper_span_max).to_radians();
            eyelids.push(upper_lid(tilt, span, uniform(self.lid_depth_min, self.lid_depth_max)));
        }
        if self.lower_span_max > 0.0 {
            let span = uniform(0.0, self.lower_span_max).to_radians();
            eyelids.push(lower_lid(tilt, span, uniform(self.lid_depth_min, self.lid_depth_max)));
        }
        let seed = rng.random();
        Ok(SyntheticEyeSpec {
            width: self.width,
            height: self.height,
            pupil: Circle::new(cx + off * off_angle.cos(), cy + off * off_angle.sin(), rp),
            iris: Circle::new(cx, cy, ri),
            eye_angle: tilt,
            eyelids,
            lash_width: self.lash_width,
            levels: Levels {
                pupil: self.pupil_level,
                iris: self.iris_level,
                sclera: self.sclera_level,
                skin: self.skin_level,
                lashes: self.lash_level,
            },
            noise: self.noise_spec()?,
            reflections: Reflections { count: self.reflections, radius: self.reflection_radius },
            seed,
        })
    }

    pub fn image_id(&self, index: usize) -> String {
        format!("synth-{index:05}")
    }
}

/// Where corpus images come from.
#[derive(Debug, Clone)]
pub enum CorpusSource {
    /// Images plus `<name>.truth.png` masks.
    Directory(PathBuf),
    Synthetic(SynthPlan),
}

/// One image of a directory corpus.
#[derive(Debug, Clone)]
pub struct DirEntry {
    pub id: String,
    pub image: PathBuf,
    pub truth: PathBuf,
}

const TRUTH_SUFFIX: &str = ".truth.png";

/// Image files of a directory in name order, excluding truth masks.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let read = std::fs::read_dir(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    let mut images: Vec<PathBuf> = read
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            let ext = p.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
            p.is_file() && !name.ends_with(TRUTH_SUFFIX) && matches!(ext.as_str(), "png" | "pgm")
        })
        .collect();
    images.sort();
    if images.is_empty() {
        return Err(Error::Corpus(format!("no images found in {}", dir.display())));
    }
    Ok(images)
}

/// Lists the images of a directory corpus in name order, pairing each with
/// its truth mask.
pub fn list_directory(dir: &Path) -> Result<Vec<DirEntry>> {
    list_images(dir)?
        .into_iter()
        .map(|image| {
            let stem = image.file_stem().and_then(|s| s.to_str()).unwrap_or("").to_string();
            let truth = image.with_file_name(format!("{stem}{TRUTH_SUFFIX}"));
            if !truth.is_file() {
                return Err(Error::Corpus(format!("missing truth mask {}", truth.display())));
            }
            Ok(DirEntry { id: stem, image, truth })
        })
        .collect()
}

/// Truth-mask path convention for `image`.
pub fn truth_path(image: &Path) -> PathBuf {
    let stem = image.file_stem().and_then(|s| s.to_str()).unwrap_or("");
    image.with_file_name(format!("{stem}{TRUTH_SUFFIX}"))
}

/// Segments `image` and scores it against `truth`.
pub fn evaluate_image(id: &str, image: &GrayImage, truth: &Mask, params: &PipelineParams) -> EvalRecord {
    if (image.width(), image.height()) != (truth.width(), truth.height()) {
        return EvalRecord::failed(id, "truth mask dimensions differ from the image");
    }
    match segment(image, params) {
        Ok(result) => {
            let ae = accuracy_error(&result.detected_iris_mask(), truth).expect("dimensions checked");
            EvalRecord::new(id, ae, Some(result.timings))
        }
        Err(e) => EvalRecord::failed(id, e.to_string()),
    }
}

/// Scores a synthetic eye, including geometry errors against its spec.
pub fn evaluate_synthetic(id: &str, spec: &SyntheticEyeSpec, eye: &SyntheticEye, params: &PipelineParams) -> EvalRecord {
    match segment(&eye.image, params) {
        Ok(result) => {
            let ae = accuracy_error(&result.detected_iris_mask(), &eye.truth.iris_mask).expect("same dimensions");
            let planted = spec.planted_gaps((result.pupil.cx, result.pupil.cy), result.gap_angles.grid_size());
            let union = planted.union_len(&result.gap_angles);
            let inter = planted.intersection_len(&result.gap_angles);
            let mut record = EvalRecord::new(id, ae, Some(result.timings));
            record.geometry = Some(GeometryError {
                pupil_center: result.pupil.center_distance(&eye.pupil),
                pupil_radius: (result.pupil.r - eye.pupil.r).abs(),
                iris_center: result.iris.center_distance(&eye.iris),
                iris_radius: (result.iris.r - eye.iris.r).abs(),
                gap_overlap: (union > 0).then(|| inter as f64 / union as f64),
                gap_coverage: (!planted.is_empty()).then(|| inter as f64 / planted.len() as f64),
            });
            record
        }
        Err(e) => EvalRecord::failed(id, e.to_string()),
    }
}

fn evaluate_entry(entry: &DirEntry, params: &PipelineParams) -> EvalRecord {
    let loaded = load_image(&entry.image).and_then(|img| Ok((img, load_mask(&entry.truth)?)));
    match loaded {
        Ok((img, truth)) => evaluate_image(&entry.id, &img, &truth, params),
        Err(e) => EvalRecord::failed(&entry.id, e.to_string()),
    }
}

/// Runs `f` over `0..n` on up to `jobs` threads, keeping input order.
/// `jobs == 1` runs on the calling thread.
pub fn map_indexed<T: Send>(n: usize, jobs: usize, f: impl Fn(usize) -> T + Sync + Send) -> Result<Vec<T>> {
    if jobs <= 1 {
        return Ok((0..n).map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Corpus(format!("thread pool: {e}")))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
}

/// Segments and scores every image of the corpus.
pub fn run_corpus(source: &CorpusSource, params: &PipelineParams, jobs: usize) -> Result<EvalReport> {
    params.validate()?;
    let records = match source {
        CorpusSource::Directory(dir) => {
            let entries = list_directory(dir)?;
            map_indexed(entries.len(), jobs, |i| evaluate_entry(&entries[i], params))?
        }
        CorpusSource::Synthetic(plan) => {
            plan.validate()?;
            map_indexed(plan.count, jobs, |i| {
                let id = plan.image_id(i);
                match plan.spec(i).and_then(|spec| Ok((generate_eye(&spec)?, spec))) {
                    Ok((eye, spec)) => evaluate_synthetic(&id, &spec, &eye, params),
                    Err(e) => EvalRecord::failed(id, e.to_string()),
                }
            })?
        }
    };
    EvalReport::from_records(records)
}
