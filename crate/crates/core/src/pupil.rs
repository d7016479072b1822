//! Coarse pupil localization: tri-level quantization, disc-scale LoG
//! response, seed extraction and seeded region growing.

use std::collections::VecDeque;

use crate::config::PupilParams;
use crate::error::{Error, Result};
use crate::geometry::Circle;
use crate::imgcore::{convolve, log_kernel, rescale01, GrayImage, Mask};
use crate::labeling::{largest_component, neighbor, Connectivity};

/// Image whose samples are exactly 0 (pupil), 1 (peri-pupil band) or 0.5
/// (everything else).
#[derive(Debug, Clone, PartialEq)]
pub struct TriLevelImage(GrayImage);

impl TriLevelImage {
    pub fn as_image(&self) -> &GrayImage {
        &self.0
    }
}

/// Quantizes `img` into three levels. Samples equal to either threshold fall
/// into the middle band.
pub fn to_trilevel(img: &GrayImage, t1: f64, t2: f64) -> Result<TriLevelImage> {
    if !(t1 < t2) {
        return Err(Error::param("t1/t2", format!("t1 ({t1}) must be below t2 ({t2})")));
    }
    let data = img
        .data()
        .iter()
        .map(|&v| {
            if v < t1 {
                0.0
            } else if v <= t2 {
                1.0
            } else {
                0.5
            }
        })
        .collect();
    Ok(TriLevelImage(GrayImage::from_raw(img.width(), img.height(), data)))
}

/// Scale-normalized LoG at `sigma = r_avg`, rescaled to `[0, 1]`.
pub fn coarse_log_response(tri: &TriLevelImage, r_avg: f64) -> Result<GrayImage> {
    let kernel = log_kernel(r_avg, true)?;
    Ok(rescale01(&convolve(tri.as_image(), &kernel)?))
}

/// Pixels whose response exceeds `lambda_a`.
pub fn seed_mask(response: &GrayImage, lambda_a: f64) -> Mask {
    Mask::from_vec(
        response.width(),
        response.height(),
        response.data().iter().map(|&v| v > lambda_a).collect(),
    )
    .expect("dimensions come from a valid image")
}

/// Seed pixel for region growing.
///
/// Takes the centroid of the largest 8-connected component of `mask`. If the
/// rounded centroid is not a member, the member nearest to the centroid is
/// used, preferring the darker pixel of `smooth` on distance ties.
pub fn seed_point(mask: &Mask, smooth: &GrayImage) -> Result<(usize, usize)> {
    if mask.width() != smooth.width() || mask.height() != smooth.height() {
        return Err(Error::DimensionMismatch(
            mask.width(),
            mask.height(),
            smooth.width(),
            smooth.height(),
        ));
    }
    let component = largest_component(mask, Connectivity::Eight).ok_or(Error::NoPupilCandidate)?;
    let (cx, cy) = component.centroid();
    let rounded = (cx.round() as usize, cy.round() as usize);
    if mask.get(rounded.0, rounded.1) && component.pixels.contains(&rounded) {
        return Ok(rounded);
    }
    let mut pixels = component.pixels;
    pixels.sort_by_key(|&(x, y)| (y, x));
    let key = |&(x, y): &(usize, usize)| {
        let d = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
        (d, smooth.get(x, y))
    };
    let best = pixels
        .iter()
        .copied()
        .reduce(|best, p| if key(&p) < key(&best) { p } else { best })
        .expect("components are non-empty");
    Ok(best)
}

/// Result of region growing.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelRegion {
    pub pixels: Vec<(usize, usize)>,
    /// `(x_min, y_min, x_max, y_max)`, inclusive.
    pub bbox: (usize, usize, usize, usize),
    pub centroid: (f64, f64),
    pub area: usize,
}

impl PixelRegion {
    fn from_pixels(pixels: Vec<(usize, usize)>) -> Self {
        let n = pixels.len() as f64;
        let mut bbox = (usize::MAX, usize::MAX, 0, 0);
        let (mut sx, mut sy) = (0.0, 0.0);
        for &(x, y) in &pixels {
            bbox.0 = bbox.0.min(x);
            bbox.1 = bbox.1.min(y);
            bbox.2 = bbox.2.max(x);
            bbox.3 = bbox.3.max(y);
            sx += x as f64;
            sy += y as f64;
        }
        PixelRegion {
            area: pixels.len(),
            centroid: (sx / n, sy / n),
            bbox,
            pixels,
        }
    }

    pub fn to_mask(&self, width: usize, height: usize) -> Mask {
        let mut m = Mask::empty_like(width, height);
        for &(x, y) in &self.pixels {
            m.set(x, y, true);
        }
        m
    }
}

/// Breadth-first 8-connected flood from `seed`. A pixel joins when its
/// intensity differs from the seed's by at most `tolerance`.
pub fn region_grow(smooth: &GrayImage, seed: (usize, usize), tolerance: f64) -> Result<PixelRegion> {
    let (w, h) = (smooth.width(), smooth.height());
    if seed.0 >= w || seed.1 >= h {
        return Err(Error::OutsideImage {
            x: seed.0 as f64,
            y: seed.1 as f64,
        });
    }
    let reference = smooth.get(seed.0, seed.1);
    let mut visited = vec![false; w * h];
    visited[seed.1 * w + seed.0] = true;
    let mut queue = VecDeque::from([seed]);
    let mut pixels = Vec::new();
    while let Some((x, y)) = queue.pop_front() {
        pixels.push((x, y));
        for &off in Connectivity::Eight.offsets() {
            if let Some((nx, ny)) = neighbor(x, y, off, w, h) {
                let idx = ny * w + nx;
                if !visited[idx] && (smooth.get(nx, ny) - reference).abs() <= tolerance {
                    visited[idx] = true;
                    queue.push_back((nx, ny));
                }
            }
        }
    }
    Ok(PixelRegion::from_pixels(pixels))
}

pub const MIN_PUPIL_AREA: usize = 9;

/// Equivalent-area circle centered on the region centroid.
pub fn pupil_estimate(region: &PixelRegion) -> Result<Circle> {
    if region.area < MIN_PUPIL_AREA {
        return Err(Error::PupilNotFound {
            area: region.area,
            min: MIN_PUPIL_AREA,
        });
    }
    Ok(Circle::new(
        region.centroid.0,
        region.centroid.1,
        (region.area as f64 / std::f64::consts::PI).sqrt(),
    ))
}

/// Intermediate products of the coarse pupil stage.
#[derive(Debug, Clone)]
pub struct CoarsePupil {
    pub trilevel: TriLevelImage,
    pub response: GrayImage,
    pub mask: Mask,
    pub seed: (usize, usize),
    pub region: PixelRegion,
    pub circle: Circle,
}

/// Runs the whole coarse stage on an already opened image.
pub fn locate_pupil(smooth: &GrayImage, params: &PupilParams) -> Result<CoarsePupil> {
    let trilevel = to_trilevel(smooth, params.t1, params.t2)?;
    let response = coarse_log_response(&trilevel, params.r_avg)?;
    let mask = seed_mask(&response, params.lambda_a);
    let seed = seed_point(&mask, smooth)?;
    let region = region_grow(smooth, seed, params.grow_tolerance)?;
    let circle = pupil_estimate(&region)?;
    Ok(CoarsePupil {
        trilevel,
        response,
        mask,
        seed,
        region,
        circle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn disc_image(w: usize, h: usize, cx: f64, cy: f64, r: f64, inside: f64, outside: f64) -> GrayImage {
        GrayImage::from_fn(w, h, |x, y| {
            if (x as f64 - cx).hypot(y as f64 - cy) <= r {
                inside
            } else {
                outside
            }
        })
        .unwrap()
    }

    #[test]
    fn trilevel_examples() {
        let img = GrayImage::new(5, 1, vec![0.1, 0.3, 0.9, 0.2, 0.5]).unwrap();
        let tri = to_trilevel(&img, 0.2, 0.5).unwrap();
        assert_eq!(tri.as_image().data(), &[0.0, 1.0, 0.5, 1.0, 1.0]);
        assert!(to_trilevel(&img, 0.5, 0.5).is_err());
    }

    #[test]
    fn constant_trilevel_gives_flat_response() {
        let tri = to_trilevel(&GrayImage::filled(64, 64, 0.9).unwrap(), 0.2, 0.5).unwrap();
        let resp = coarse_log_response(&tri, 8.0).unwrap();
        assert!(resp.data().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn seed_mask_examples() {
        let flat = GrayImage::filled(4, 4, 0.5).unwrap();
        assert!(seed_mask(&flat, 0.6).is_empty());
        let one = GrayImage::from_fn(4, 4, |x, y| if (x, y) == (2, 1) { 0.7 } else { 0.5 }).unwrap();
        let m = seed_mask(&one, 0.6);
        assert_eq!(m.iter_set().collect::<Vec<_>>(), vec![(2, 1)]);
    }

    #[test]
    fn seed_of_square() {
        let m = Mask::from_fn(30, 30, |x, y| (10..=14).contains(&x) && (10..=14).contains(&y)).unwrap();
        let smooth = GrayImage::filled(30, 30, 0.5).unwrap();
        assert_eq!(seed_point(&m, &smooth).unwrap(), (12, 12));
    }

    #[test]
    fn seed_uses_largest_component() {
        // 10x5 block (50 px) and a 3 px sliver
        let m = Mask::from_fn(40, 40, |x, y| ((20..30).contains(&x) && (20..25).contains(&y)) || (y == 2 && x < 3)).unwrap();
        let smooth = GrayImage::filled(40, 40, 0.5).unwrap();
        let (x, y) = seed_point(&m, &smooth).unwrap();
        assert!((20..30).contains(&x) && (20..25).contains(&y));
        assert_eq!((x, y), (25, 22));
    }

    #[test]
    fn seed_of_c_shape_snaps_to_nearest_member() {
        let m = Mask::from_fn(40, 40, |x, y| {
            let d = (x as f64 - 20.0).hypot(y as f64 - 20.0);
            (8.0..=12.0).contains(&d) && x <= 24
        })
        .unwrap();
        let smooth = GrayImage::filled(40, 40, 0.5).unwrap();
        let (x, y) = seed_point(&m, &smooth).unwrap();
        assert!(m.get(x, y));
        // exhaustive nearest-member oracle
        let c = largest_component(&m, Connectivity::Eight).unwrap().centroid();
        let best = m
            .iter_set()
            .map(|(px, py)| (px as f64 - c.0).powi(2) + (py as f64 - c.1).powi(2))
            .fold(f64::INFINITY, f64::min);
        let got = (x as f64 - c.0).powi(2) + (y as f64 - c.1).powi(2);
        assert_eq!(got, best);
        assert!(!m.get(c.0.round() as usize, c.1.round() as usize));
    }

    #[test]
    fn empty_mask_has_no_candidate() {
        let m = Mask::new(10, 10).unwrap();
        let smooth = GrayImage::filled(10, 10, 0.5).unwrap();
        assert!(matches!(seed_point(&m, &smooth), Err(Error::NoPupilCandidate)));
    }

    #[test]
    fn grow_constant_image_covers_everything() {
        let img = GrayImage::filled(20, 15, 0.3).unwrap();
        assert_eq!(region_grow(&img, (4, 4), 0.05).unwrap().area, 300);
    }

    #[test]
    fn grow_flat_disc_is_exact() {
        let img = disc_image(100, 100, 50.0, 48.0, 20.0, 0.05, 0.9);
        let region = region_grow(&img, (50, 48), 0.05).unwrap();
        let expected = img.data().iter().filter(|&&v| v == 0.05).count();
        assert_eq!(region.area, expected);
        assert!(region.pixels.iter().all(|&(x, y)| img.get(x, y) == 0.05));
    }

    #[test]
    fn grow_noisy_disc() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let clean = disc_image(100, 100, 50.0, 50.0, 25.0, 0.1, 0.8);
        let noisy = GrayImage::new(
            100,
            100,
            clean.data().iter().map(|v| v + rng.random_range(-0.02..=0.02)).collect(),
        )
        .unwrap();
        let region = region_grow(&noisy, (50, 50), 0.05).unwrap();
        let disc: Vec<_> = (0..100 * 100)
            .map(|i| (i % 100, i / 100))
            .filter(|&(x, y)| clean.get(x, y) == 0.1)
            .collect();
        let region_mask = region.to_mask(100, 100);
        let covered = disc.iter().filter(|&&(x, y)| region_mask.get(x, y)).count();
        assert!(covered as f64 >= 0.95 * disc.len() as f64);
        for &(x, y) in &region.pixels {
            assert!((x as f64 - 50.0).hypot(y as f64 - 50.0) <= 26.5);
        }
    }

    #[test]
    fn estimate_examples() {
        let disc = disc_image(200, 200, 100.0, 100.0, 30.0, 0.0, 1.0);
        let r = region_grow(&disc, (100, 100), 0.05).unwrap();
        let c = pupil_estimate(&r).unwrap();
        assert!((c.cx - 100.0).abs() < 1e-9 && (c.cy - 100.0).abs() < 1e-9);
        assert!((c.r - 30.0).abs() <= 0.5);

        let square = GrayImage::from_fn(50, 50, |x, y| if (10..31).contains(&x) && (10..31).contains(&y) { 0.0 } else { 1.0 }).unwrap();
        let c = pupil_estimate(&region_grow(&square, (15, 15), 0.05).unwrap()).unwrap();
        assert!((c.r - (441.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
        assert!((c.r - 11.85).abs() < 0.01);

        let notched = GrayImage::from_fn(200, 200, |x, y| {
            if (x, y) == (130, 100) || (x as f64 - 100.0).hypot(y as f64 - 100.0) > 30.0 { 1.0 } else { 0.0 }
        })
        .unwrap();
        let c = pupil_estimate(&region_grow(&notched, (100, 100), 0.05).unwrap()).unwrap();
        assert!((c.cx - 100.0).hypot(c.cy - 100.0) < 0.2);
    }

    #[test]
    fn estimate_rejects_tiny_region() {
        let img = GrayImage::from_fn(20, 20, |x, y| if x < 2 && y < 2 { 0.0 } else { 1.0 }).unwrap();
        let region = region_grow(&img, (0, 0), 0.05).unwrap();
        assert!(matches!(pupil_estimate(&region), Err(Error::PupilNotFound { area: 4, .. })));
    }

    #[test]
    fn coarse_response_peaks_in_disc() {
        let img = disc_image(160, 160, 80.0, 76.0, 20.0, 0.05, 0.9);
        let tri = to_trilevel(&img, 0.2, 0.5).unwrap();
        let resp = coarse_log_response(&tri, 20.0).unwrap();
        let (mx, my) = resp.to_field().argmax();
        assert!((mx as f64 - 80.0).hypot(my as f64 - 76.0) <= 2.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn trilevel_values_and_monotone(data in proptest::collection::vec(0.0f64..=1.0, 64), t1 in 0.05f64..0.4, dt in 0.01f64..0.2, t2 in 0.45f64..0.95) {
            let img = GrayImage::new(8, 8, data).unwrap();
            let a = to_trilevel(&img, t1, t2).unwrap();
            let b = to_trilevel(&img, t1 + dt, t2.max(t1 + dt + 0.01)).unwrap();
            prop_assert!(a.as_image().data().iter().all(|&v| v == 0.0 || v == 0.5 || v == 1.0));
            for (va, vb) in a.as_image().data().iter().zip(b.as_image().data()) {
                if *va == 0.0 { prop_assert_eq!(*vb, 0.0); }
            }
        }

        #[test]
        fn seed_translation_equivariant(blobs in proptest::collection::vec((0usize..20, 0usize..20, 1usize..6), 1..4), dx in 0usize..10, dy in 0usize..10) {
            let base = |x: usize, y: usize| blobs.iter().any(|&(bx, by, r)| {
                let (px, py) = (x as isize - bx as isize, y as isize - by as isize);
                px * px + py * py <= (r * r) as isize
            });
            let m0 = Mask::from_fn(40, 40, base).unwrap();
            let m1 = Mask::from_fn(40, 40, |x, y| x >= dx && y >= dy && base(x - dx, y - dy)).unwrap();
            let flat = GrayImage::filled(40, 40, 0.5).unwrap();
            // blobs are kept away from the far border so translation never clips them
            let (sx, sy) = seed_point(&m0, &flat).unwrap();
            let (tx, ty) = seed_point(&m1, &flat).unwrap();
            prop_assert_eq!((sx + dx, sy + dy), (tx, ty));
        }
    }
}
