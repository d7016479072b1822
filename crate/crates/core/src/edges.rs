//! LoG zero-crossing edges with gradient-strength suppression and
//! small-component cleanup.

use crate::config::EdgeParams;
use crate::error::Result;
use crate::imgcore::{convolve, gaussian_taps, log_kernel, smooth_separable, EdgeMap, Field, GrayImage, Mask};
use crate::labeling::{components, Connectivity};

/// Maximal gradient magnitudes below this are treated as a flat image.
const FLAT_GRADIENT: f64 = 1e-12;

/// Signed LoG response of `img` at scale `sigma`.
///
/// The image is centered on 0.5 first so that the response of `1 - img` is
/// the exact negation of the response of `img`.
pub fn log_response(img: &GrayImage, sigma: f64) -> Result<Field> {
    let centered = centered(img);
    convolve(&centered, &log_kernel(sigma, false)?)
}

fn centered(img: &GrayImage) -> Field {
    Field::from_raw(
        img.width(),
        img.height(),
        img.data().iter().map(|v| v - 0.5).collect(),
    )
}

/// Central-difference gradient magnitude of the Gaussian-smoothed image,
/// divided by its maximum over the image.
pub fn normalized_gradient(img: &GrayImage, sigma: f64) -> Result<Field> {
    let smoothed = smooth_separable(&centered(img), &gaussian_taps(sigma)?)?;
    let (w, h) = (img.width(), img.height());
    let at = |x: usize, y: usize| smoothed.get(x, y);
    let mut mag = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let gx = (at((x + 1).min(w - 1), y) - at(x.saturating_sub(1), y)) / 2.0;
            let gy = (at(x, (y + 1).min(h - 1)) - at(x, y.saturating_sub(1))) / 2.0;
            mag.push(gx.hypot(gy));
        }
    }
    let max = mag.iter().cloned().fold(0.0, f64::max);
    if max > FLAT_GRADIENT {
        mag.iter_mut().for_each(|m| *m /= max);
    } else {
        mag.iter_mut().for_each(|m| *m = 0.0);
    }
    Ok(Field::from_raw(w, h, mag))
}

/// Raw sign-change pixels of a response field.
///
/// A strict sign change between 4-neighbors marks the pixel with the smaller
/// magnitude (the first one on ties). A pixel whose response is exactly zero
/// is marked when any 4-neighbor is nonzero.
pub fn sign_changes(response: &Field) -> Mask {
    let (w, h) = (response.width(), response.height());
    let mut out = Mask::empty_like(w, h);
    let v = |x: usize, y: usize| response.get(x, y);
    for y in 0..h {
        for x in 0..w {
            let p = v(x, y);
            if p == 0.0 {
                let any_nonzero = (x > 0 && v(x - 1, y) != 0.0)
                    || (x + 1 < w && v(x + 1, y) != 0.0)
                    || (y > 0 && v(x, y - 1) != 0.0)
                    || (y + 1 < h && v(x, y + 1) != 0.0);
                if any_nonzero {
                    out.set(x, y, true);
                }
                continue;
            }
            for (qx, qy) in [(x + 1, y), (x, y + 1)] {
                if qx >= w || qy >= h {
                    continue;
                }
                let q = v(qx, qy);
                if (p > 0.0 && q < 0.0) || (p < 0.0 && q > 0.0) {
                    if q.abs() < p.abs() {
                        out.set(qx, qy, true);
                    } else {
                        out.set(x, y, true);
                    }
                }
            }
        }
    }
    out
}

/// Zero crossings of the `sigma_zc` LoG whose normalized gradient strength
/// is at least `lambda_c`.
pub fn zero_crossings(smooth: &GrayImage, params: &EdgeParams) -> Result<EdgeMap> {
    params.validate()?;
    let response = log_response(smooth, params.sigma_zc)?;
    let gradient = normalized_gradient(smooth, params.sigma_zc)?;
    let mut crossings = sign_changes(&response);
    let (w, h) = (smooth.width(), smooth.height());
    for y in 0..h {
        for x in 0..w {
            if crossings.get(x, y) && !(gradient.get(x, y) >= params.lambda_c && gradient.get(x, y) > 0.0) {
                crossings.set(x, y, false);
            }
        }
    }
    Ok(crossings)
}

/// Erases 8-connected components with fewer than `min_component` pixels.
pub fn clean_components(edges: &EdgeMap, min_component: usize) -> EdgeMap {
    let mut out = edges.clone();
    for c in components(edges, Connectivity::Eight) {
        if c.len() < min_component {
            for (x, y) in c.pixels {
                out.set(x, y, false);
            }
        }
    }
    out
}

/// Zero crossings followed by component cleanup.
pub fn detect_edges(smooth: &GrayImage, params: &EdgeParams) -> Result<EdgeMap> {
    Ok(clean_components(&zero_crossings(smooth, params)?, params.min_component))
}
