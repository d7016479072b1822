//! Synthetic eye images with known geometry.

use std::f64::consts::{FRAC_PI_2, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::boundary::AngleSet;
use crate::error::{Error, Result};
use crate::geometry::Circle;
use crate::imgcore::{GrayImage, Mask};

/// Region intensities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Levels {
    pub pupil: f64,
    pub iris: f64,
    pub sclera: f64,
    pub skin: f64,
    /// Fringe along the upper lid margin.
    pub lashes: f64,
}

impl Default for Levels {
    fn default() -> Self {
        Levels { pupil: 0.03, iris: 0.4, sclera: 0.6, skin: 0.95, lashes: 0.22 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    Gaussian,
    SaltPepper,
    Speckle,
    Poisson,
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(NoiseKind::Gaussian),
            "salt-pepper" | "salt_pepper" => Ok(NoiseKind::SaltPepper),
            "speckle" => Ok(NoiseKind::Speckle),
            "poisson" => Ok(NoiseKind::Poisson),
            _ => Err(Error::param("noise", format!("unknown kind `{s}`"))),
        }
    }
}

/// Additive noise. `strength` is the standard deviation for gaussian and
/// speckle, the flipped fraction for salt-and-pepper, and the intensity of
/// one photon for poisson (1/255 mimics 8-bit shot noise).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Noise {
    pub kind: NoiseKind,
    pub strength: f64,
}

/// Eyelid covering an angular run of the limbus.
///
/// The lid edge is a circular arc through the two limbus points at
/// `center_angle +- span / 2`. `depth` scales how far the arc reaches into
/// the iris relative to the straight chord between those points; 1 is the
/// chord itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eyelid {
    pub center_angle: f64,
    pub span: f64,
    pub depth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reflections {
    pub count: usize,
    pub radius: f64,
}

/// Everything needed to render one eye.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticEyeSpec {
    pub width: usize,
    pub height: usize,
    pub pupil: Circle,
    pub iris: Circle,
    /// Major-axis angle of the eye opening.
    pub eye_angle: f64,
    pub eyelids: Vec<Eyelid>,
    /// Width of the dark lash fringe on the upper lid margin; 0 disables it.
    pub lash_width: f64,
    pub levels: Levels,
    pub noise: Option<Noise>,
    pub reflections: Reflections,
    pub seed: u64,
}

/// Actual iris pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub iris_mask: Mask,
}

#[derive(Debug, Clone)]
pub struct SyntheticEye {
    pub image: GrayImage,
    pub truth: GroundTruth,
    pub pupil: Circle,
    pub iris: Circle,
}

/// Half-plane or disc complement describing the covered side of a lid edge.
#[derive(Debug, Clone, Copy)]
enum LidShape {
    HalfPlane { ux: f64, uy: f64, offset: f64, ox: f64, oy: f64 },
    Outside { cx: f64, cy: f64, r: f64, ux: f64, uy: f64, ox: f64, oy: f64 },
}

impl LidShape {
    fn new(lid: &Eyelid, iris: &Circle) -> Option<LidShape> {
        if lid.depth <= 0.0 || lid.span <= 0.0 {
            return None;
        }
        let (ux, uy) = (lid.center_angle.cos(), lid.center_angle.sin());
        let half = lid.span / 2.0;
        let r = iris.r;
        if lid.depth >= 1.0 {
            return Some(LidShape::HalfPlane { ux, uy, offset: r * half.cos(), ox: iris.cx, oy: iris.cy });
        }
        // apex of the arc sits this far from the iris center
        let q = r - lid.depth * r * (1.0 - half.cos());
        let d = (r * r - q * q) / (2.0 * (q - r * half.cos()));
        Some(LidShape::Outside {
            cx: iris.cx - d * ux,
            cy: iris.cy - d * uy,
            r: q + d,
            ux,
            uy,
            ox: iris.cx,
            oy: iris.cy,
        })
    }

    fn covers(&self, x: f64, y: f64) -> bool {
        match *self {
            LidShape::HalfPlane { ux, uy, offset, ox, oy } => (x - ox) * ux + (y - oy) * uy > offset,
            LidShape::Outside { cx, cy, r, ux, uy, ox, oy } => {
                (x - ox) * ux + (y - oy) * uy > 0.0 && (x - cx).hypot(y - cy) > r
            }
        }
    }
}

impl SyntheticEyeSpec {
    pub fn validate(&self) -> Result<()> {
        let geom = |reason: String| Err(Error::param("synthetic eye", reason));
        if self.width == 0 || self.height == 0 {
            return geom("zero image size".into());
        }
        let (p, i) = (&self.pupil, &self.iris);
        if !(p.r > 0.0 && i.r > p.r) {
            return geom(format!("need 0 < pupil radius {} < iris radius {}", p.r, i.r));
        }
        if p.center_distance(i) + p.r >= i.r {
            return geom("pupil not inside iris".into());
        }
        if i.cx - i.r < 0.0 || i.cy - i.r < 0.0 || i.cx + i.r > (self.width - 1) as f64 || i.cy + i.r > (self.height - 1) as f64 {
            return geom("iris not inside image".into());
        }
        let l = &self.levels;
        if !(self.lash_width >= 0.0) {
            return geom("lash width must be >= 0".into());
        }
        if [l.pupil, l.iris, l.sclera, l.skin, l.lashes].iter().any(|v| !(0.0..=1.0).contains(v)) {
            return geom("levels must lie in [0, 1]".into());
        }
        if self.eyelids.iter().any(|e| !(0.0..=1.0).contains(&e.depth) || !(0.0..std::f64::consts::PI).contains(&e.span)) {
            return geom("eyelid depth must lie in [0, 1] and span in [0, pi)".into());
        }
        if let Some(n) = self.noise {
            let ok = match n.kind {
                NoiseKind::SaltPepper => (0.0..=1.0).contains(&n.strength),
                _ => n.strength >= 0.0 && n.strength.is_finite(),
            };
            if !ok {
                return geom(format!("bad noise strength {}", n.strength));
            }
        }
        if self.reflections.count > 0 && !(self.reflections.radius > 0.0 && self.reflections.radius < p.r) {
            return geom("reflection radius must lie in (0, pupil radius)".into());
        }
        Ok(())
    }

    fn lids(&self) -> Vec<LidShape> {
        self.eyelids.iter().filter_map(|l| LidShape::new(l, &self.iris)).collect()
    }

    fn covered(lids: &[LidShape], x: f64, y: f64) -> bool {
        lids.iter().any(|l| l.covers(x, y))
    }

    /// Inside the almond-shaped eye opening.
    fn in_opening(&self, x: f64, y: f64) -> bool {
        let (c, s) = (self.eye_angle.cos(), self.eye_angle.sin());
        let (dx, dy) = (x - self.iris.cx, y - self.iris.cy);
        let (u, v) = (dx * c + dy * s, -dx * s + dy * c);
        let (a, b) = (2.4 * self.iris.r, 1.15 * self.iris.r);
        (u / a).powi(2) + (v / b).powi(2) <= 1.0
    }

    /// Visible pixels above the eye axis lying within `lash_width` of a
    /// hidden pixel.
    fn lash_fringe(&self, hidden: &[bool]) -> Vec<bool> {
        let (w, h) = (self.width, self.height);
        if self.lash_width <= 0.0 {
            return vec![false; w * h];
        }
        let reach = self.lash_width.ceil() as isize;
        let (c, s) = (self.eye_angle.cos(), self.eye_angle.sin());
        (0..w * h)
            .map(|i| {
                let (x, y) = ((i % w) as isize, (i / w) as isize);
                let above = -(x as f64 - self.iris.cx) * s + (y as f64 - self.iris.cy) * c < 0.0;
                if hidden[i] || !above {
                    return false;
                }
                (-reach..=reach).any(|dy| {
                    (-reach..=reach).any(|dx| {
                        let (nx, ny) = (x + dx, y + dy);
                        ((dx * dx + dy * dy) as f64) <= self.lash_width * self.lash_width
                            && nx >= 0
                            && ny >= 0
                            && (nx as usize) < w
                            && (ny as usize) < h
                            && hidden[ny as usize * w + nx as usize]
                    })
                })
            })
            .collect()
    }

    /// Angles, on a grid of `n` rays from `origin`, whose true limbus point
    /// is hidden by an eyelid.
    pub fn planted_gaps(&self, origin: (f64, f64), n: usize) -> AngleSet {
        let lids = self.lids();
        AngleSet::from_fn(n, |a| match self.iris.ray_distance(origin.0, origin.1, a) {
            Some(t) => Self::covered(&lids, origin.0 + t * a.cos(), origin.1 + t * a.sin()),
            None => false,
        })
    }
}

/// Renders the eye, then its noise.
pub fn generate_eye(spec: &SyntheticEyeSpec) -> Result<SyntheticEye> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let lids = spec.lids();
    let spots: Vec<(f64, f64)> = (0..spec.reflections.count)
        .map(|_| {
            let reach = (spec.pupil.r - spec.reflections.radius - 1.0).max(0.0);
            let (t, rho) = (rng.random_range(0.0..TAU), reach * rng.random::<f64>().sqrt());
            (spec.pupil.cx + rho * t.cos(), spec.pupil.cy + rho * t.sin())
        })
        .collect();
    let l = spec.levels;

    let hidden: Vec<bool> = (0..w * h)
        .map(|i| {
            let (fx, fy) = ((i % w) as f64, (i / w) as f64);
            !spec.in_opening(fx, fy) || SyntheticEyeSpec::covered(&lids, fx, fy)
        })
        .collect();
    let lashed = spec.lash_fringe(&hidden);

    let mut data = Vec::with_capacity(w * h);
    let mut truth = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (fx, fy) = (x as f64, y as f64);
            let i = y * w + x;
            let in_iris = spec.iris.contains(fx, fy);
            let in_pupil = spec.pupil.contains(fx, fy);
            let v = if hidden[i] {
                l.skin
            } else if lashed[i] {
                l.lashes
            } else if in_pupil {
                if spots.iter().any(|&(sx, sy)| (fx - sx).hypot(fy - sy) <= spec.reflections.radius) {
                    1.0
                } else {
                    l.pupil
                }
            } else if in_iris {
                l.iris
            } else {
                l.sclera
            };
            data.push(v);
            truth.push(in_iris && !in_pupil && !hidden[i] && !lashed[i]);
        }
    }
    if let Some(noise) = spec.noise {
        apply_noise(&mut data, noise, &mut rng)?;
    }
    Ok(SyntheticEye {
        image: GrayImage::new(w, h, data)?,
        truth: GroundTruth { iris_mask: Mask::from_vec(w, h, truth)? },
        pupil: spec.pupil,
        iris: spec.iris,
    })
}

fn apply_noise(data: &mut [f64], noise: Noise, rng: &mut ChaCha8Rng) -> Result<()> {
    let s = noise.strength;
    if s == 0.0 {
        return Ok(());
    }
    let bad = |e: rand_distr::NormalError| Error::param("noise", e.to_string());
    match noise.kind {
        NoiseKind::Gaussian => {
            let n = Normal::new(0.0, s).map_err(bad)?;
            for v in data.iter_mut() {
                *v = (*v + n.sample(rng)).clamp(0.0, 1.0);
            }
        }
        NoiseKind::Speckle => {
            let n = Normal::new(0.0, s).map_err(bad)?;
            for v in data.iter_mut() {
                *v = (*v * (1.0 + n.sample(rng))).clamp(0.0, 1.0);
            }
        }
        NoiseKind::SaltPepper => {
            for v in data.iter_mut() {
                if rng.random::<f64>() < s {
                    *v = if rng.random::<bool>() { 1.0 } else { 0.0 };
                }
            }
        }
        NoiseKind::Poisson => {
            for v in data.iter_mut() {
                let lambda = *v / s;
                if lambda > 0.0 {
                    let p = Poisson::new(lambda).map_err(|e| Error::param("noise", e.to_string()))?;
                    *v = (p.sample(rng) * s).clamp(0.0, 1.0);
                }
            }
        }
    }
    Ok(())
}

/// Upper lid centered above the eye axis.
pub fn upper_lid(eye_angle: f64, span: f64, depth: f64) -> Eyelid {
    Eyelid { center_angle: eye_angle - FRAC_PI_2, span, depth }
}

/// Lower lid centered below the eye axis.
pub fn lower_lid(eye_angle: f64, span: f64, depth: f64) -> Eyelid {
    Eyelid { center_angle: eye_angle + FRAC_PI_2, span, depth }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spec() -> SyntheticEyeSpec {
        SyntheticEyeSpec {
            width: 320,
            height: 240,
            pupil: Circle::new(161.0, 119.0, 25.0),
            iris: Circle::new(160.0, 120.0, 60.0),
            eye_angle: 0.1,
            eyelids: vec![],
            lash_width: 0.0,
            levels: Levels::default(),
            noise: None,
            reflections: Reflections { count: 0, radius: 3.0 },
            seed: 7,
        }
    }

    #[test]
    fn clean_levels_exact() {
        let s = spec();
        let eye = generate_eye(&s).unwrap();
        let l = s.levels;
        assert_eq!(eye.image.get(161, 119), l.pupil);
        assert_eq!(eye.image.get(160, 120 - 45), l.iris);
        assert_eq!(eye.image.get(160 + 100, 120), l.sclera);
        assert_eq!(eye.image.get(0, 0), l.skin);
        let values: std::collections::BTreeSet<u64> = eye.image.data().iter().map(|v| v.to_bits()).collect();
        assert_eq!(values.len(), 4);
    }

    #[test]
    fn same_seed_same_image() {
        let mut s = spec();
        s.noise = Some(Noise { kind: NoiseKind::Gaussian, strength: 0.05 });
        s.reflections.count = 2;
        let (a, b) = (generate_eye(&s).unwrap(), generate_eye(&s).unwrap());
        assert_eq!(a.image, b.image);
        s.seed = 8;
        assert_ne!(a.image, generate_eye(&s).unwrap().image);
    }

    #[test]
    fn salt_pepper_fraction() {
        let clean = generate_eye(&spec()).unwrap();
        let mut s = spec();
        s.noise = Some(Noise { kind: NoiseKind::SaltPepper, strength: 0.02 });
        let noisy = generate_eye(&s).unwrap();
        let flipped = clean.image.data().iter().zip(noisy.image.data()).filter(|(a, b)| a != b).count();
        let frac = flipped as f64 / (320.0 * 240.0);
        assert!((frac - 0.02).abs() <= 0.005, "{frac}");
    }

    #[test]
    fn annulus_area_matches() {
        let eye = generate_eye(&spec()).unwrap();
        let expected = PI * (60.0f64.powi(2) - 25.0f64.powi(2));
        let got = eye.truth.iris_mask.count() as f64;
        assert!((got - expected).abs() / expected < 0.02);
    }

    #[test]
    fn chord_lid_removes_segment() {
        let mut s = spec();
        s.pupil = Circle::new(160.0, 120.0, 25.0);
        let span = 100f64.to_radians();
        s.eyelids = vec![upper_lid(0.0, span, 1.0)];
        let eye = generate_eye(&s).unwrap();
        let r = 60.0f64;
        let segment = r * r / 2.0 * (span - span.sin());
        let expected = PI * (r * r - 25.0 * 25.0) - segment;
        let got = eye.truth.iris_mask.count() as f64;
        assert!((got - expected).abs() / expected < 0.02, "{got} vs {expected}");
        assert_eq!(eye.image.get(160, 120 - 58), s.levels.skin);
    }

    #[test]
    fn shallow_lid_hides_less_but_same_angles() {
        let mut s = spec();
        s.pupil = Circle::new(160.0, 120.0, 25.0);
        let span = 100f64.to_radians();
        s.eyelids = vec![upper_lid(0.0, span, 1.0)];
        let deep = generate_eye(&s).unwrap().truth.iris_mask.count();
        let deep_gaps = s.planted_gaps((160.0, 120.0), 360);
        s.eyelids = vec![upper_lid(0.0, span, 0.4)];
        let shallow = generate_eye(&s).unwrap().truth.iris_mask.count();
        let shallow_gaps = s.planted_gaps((160.0, 120.0), 360);
        assert!(shallow > deep);
        for gaps in [deep_gaps, shallow_gaps] {
            assert!((gaps.len() as i64 - 100).abs() <= 2, "{}", gaps.len());
            assert!(gaps.contains_angle(-FRAC_PI_2) && !gaps.contains_angle(0.0));
        }
    }

    #[test]
    fn rejects_bad_geometry() {
        let mut s = spec();
        s.iris.r = 20.0;
        assert!(generate_eye(&s).is_err());
        let mut s = spec();
        s.iris.cx = 30.0;
        assert!(generate_eye(&s).is_err());
    }
}
