//! Eye orientation from the large-scale LoG blob around the pupil.

use crate::error::Result;
use crate::geometry::Circle;
use crate::imgcore::{convolve, log_kernel, GrayImage, Mask};
use crate::labeling::{components, Connectivity};

/// Positive responses at or above this quantile of the positive values are
/// kept, i.e. the top 70%.
const POSITIVE_QUANTILE: f64 = 0.3;
/// Relative eigenvalue gap below which the blob is treated as round.
const ROUND_GAP: f64 = 0.05;
/// Responses at or below this are round-off on a flat image.
const FLAT_RESPONSE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Orientation {
    /// Major-axis angle in `(-pi/2, pi/2]`, image coordinates (y down).
    pub angle: f64,
    /// Blob used for the estimate; empty when none overlapped the pupil.
    pub mask: Mask,
    pub low_confidence: bool,
}

/// Principal-axis angle and round-blob flag from second central moments.
pub fn moment_orientation(pixels: &[(usize, usize)]) -> (f64, bool) {
    if pixels.len() < 2 {
        return (0.0, true);
    }
    let n = pixels.len() as f64;
    let (mx, my) = pixels
        .iter()
        .fold((0.0, 0.0), |(ax, ay), &(x, y)| (ax + x as f64 / n, ay + y as f64 / n));
    let (mut mu20, mut mu02, mut mu11) = (0.0, 0.0, 0.0);
    for &(x, y) in pixels {
        let (dx, dy) = (x as f64 - mx, y as f64 - my);
        mu20 += dx * dx;
        mu02 += dy * dy;
        mu11 += dx * dy;
    }
    let angle = 0.5 * (2.0 * mu11).atan2(mu20 - mu02);
    let half_sum = (mu20 + mu02) / 2.0;
    let root = (((mu20 - mu02) / 2.0).powi(2) + mu11 * mu11).sqrt();
    let (major, minor) = (half_sum + root, half_sum - root);
    let low_confidence = !(major > 0.0) || (major - minor) < ROUND_GAP * major;
    (angle, low_confidence)
}

/// Orientation of the eye.
///
/// The opened image is filtered with the scale-normalized LoG at the pupil
/// scale; positive responses in the top 70% form a mask, and the largest
/// 8-connected component overlapping the pupil disc is the eye blob.
pub fn eye_orientation(smooth: &GrayImage, pupil: &Circle, r_avg: f64) -> Result<Orientation> {
    let response = convolve(smooth, &log_kernel(r_avg, true)?)?;
    let (w, h) = (smooth.width(), smooth.height());
    let mut positive: Vec<f64> = response.data().iter().copied().filter(|&v| v > FLAT_RESPONSE).collect();
    let empty = || Orientation {
        angle: 0.0,
        mask: Mask::empty_like(w, h),
        low_confidence: true,
    };
    if positive.is_empty() {
        return Ok(empty());
    }
    positive.sort_by(f64::total_cmp);
    let cut = positive[((positive.len() - 1) as f64 * POSITIVE_QUANTILE).floor() as usize];
    let strong = Mask::from_vec(w, h, response.data().iter().map(|&v| v > FLAT_RESPONSE && v >= cut).collect())
        .expect("dimensions from image");

    let overlaps = |pixels: &[(usize, usize)]| pixels.iter().any(|&(x, y)| pupil.contains(x as f64, y as f64));
    let Some(blob) = components(&strong, Connectivity::Eight)
        .into_iter()
        .filter(|c| overlaps(&c.pixels))
        .reduce(|best, c| if c.len() > best.len() { c } else { best })
    else {
        return Ok(empty());
    };
    let (angle, low_confidence) = moment_orientation(&blob.pixels);
    let mut mask = Mask::empty_like(w, h);
    for &(x, y) in &blob.pixels {
        mask.set(x, y, true);
    }
    Ok(Orientation {
        angle,
        mask,
        low_confidence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ellipse(a: f64, b: f64, theta: f64) -> Vec<(usize, usize)> {
        let (s, c) = theta.sin_cos();
        let mut out = Vec::new();
        for y in 0..200 {
            for x in 0..200 {
                let (dx, dy) = (x as f64 - 100.0, y as f64 - 100.0);
                let u = c * dx + s * dy;
                let v = -s * dx + c * dy;
                if (u / a).powi(2) + (v / b).powi(2) <= 1.0 {
                    out.push((x, y));
                }
            }
        }
        out
    }

    #[test]
    fn axis_aligned_ellipse() {
        let (angle, low) = moment_orientation(&ellipse(60.0, 30.0, 0.0));
        assert!(angle.abs() < 0.02 && !low);
    }

    #[test]
    fn rotated_ellipse() {
        let (angle, low) = moment_orientation(&ellipse(60.0, 30.0, 0.3));
        assert!((angle - 0.3).abs() < 0.02, "angle {angle}");
        assert!(!low);
        let (angle, _) = moment_orientation(&ellipse(60.0, 30.0, -1.2));
        assert!((angle + 1.2).abs() < 0.02);
    }

    #[test]
    fn round_blob_flagged() {
        let (_, low) = moment_orientation(&ellipse(40.0, 40.0, 0.0));
        assert!(low);
    }

    #[test]
    fn no_overlap_defaults() {
        let img = GrayImage::filled(80, 80, 0.5).unwrap();
        let o = eye_orientation(&img, &Circle::new(40.0, 40.0, 10.0), 5.0).unwrap();
        assert_eq!(o.angle, 0.0);
        assert!(o.low_confidence && o.mask.is_empty());
    }

    #[test]
    fn dark_horizontal_ellipse_on_bright_ground() {
        let img = GrayImage::from_fn(240, 160, |x, y| {
            let (dx, dy) = (x as f64 - 120.0, y as f64 - 80.0);
            if dx.hypot(dy) <= 12.0 {
                0.05
            } else if (dx / 90.0).powi(2) + (dy / 40.0).powi(2) <= 1.0 {
                0.4
            } else {
                0.9
            }
        })
        .unwrap();
        let o = eye_orientation(&img, &Circle::new(120.0, 80.0, 12.0), 12.0).unwrap();
        assert!(!o.low_confidence);
        assert!(o.angle.abs() < 0.1, "angle {}", o.angle);
    }
}
