//! Flat grayscale morphology with disc structuring elements.

use rayon::prelude::*;

use super::raster::GrayImage;
use crate::error::{Error, Result};

/// Disc footprint `{(dx, dy) : dx^2 + dy^2 <= radius^2}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuringElement {
    radius: usize,
    /// Half-width of the footprint row at each `dy` in `-radius..=radius`.
    spans: Vec<usize>,
}

impl StructuringElement {
    pub fn disc(radius: usize) -> Result<Self> {
        if radius == 0 {
            return Err(Error::param("radius", "structuring element radius must be >= 1"));
        }
        let r2 = (radius * radius) as isize;
        let spans = (-(radius as isize)..=radius as isize)
            .map(|dy| {
                let mut half = 0;
                while ((half + 1) * (half + 1)) as isize + dy * dy <= r2 {
                    half += 1;
                }
                half
            })
            .collect();
        Ok(StructuringElement { radius, spans })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn contains(&self, dx: isize, dy: isize) -> bool {
        dx * dx + dy * dy <= (self.radius * self.radius) as isize
    }

    /// Number of pixels in the footprint.
    pub fn area(&self) -> usize {
        self.spans.iter().map(|s| 2 * s + 1).sum()
    }
}

fn check_fit(img: &GrayImage, se: &StructuringElement) -> Result<()> {
    if 2 * se.radius >= img.width().min(img.height()) {
        return Err(Error::TooLarge {
            what: "structuring element diameter",
            size: 2 * se.radius,
            width: img.width(),
            height: img.height(),
        });
    }
    Ok(())
}

fn rank_filter(img: &GrayImage, se: &StructuringElement, pick: fn(f64, f64) -> f64, init: f64) -> GrayImage {
    let (w, h) = (img.width(), img.height());
    let src = img.data();
    let r = se.radius as isize;
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            let mut acc = init;
            for (k, &half) in se.spans.iter().enumerate() {
                let sy = (y as isize + k as isize - r).clamp(0, h as isize - 1) as usize;
                let line = &src[sy * w..(sy + 1) * w];
                let lo = (x as isize - half as isize).max(0) as usize;
                let hi = (x + half).min(w - 1);
                // replicate padding only ever repeats the edge sample
                for &v in &line[lo..=hi] {
                    acc = pick(acc, v);
                }
            }
            *o = acc;
        }
    });
    GrayImage::from_raw(w, h, out)
}

pub fn erode(img: &GrayImage, se: &StructuringElement) -> Result<GrayImage> {
    check_fit(img, se)?;
    Ok(rank_filter(img, se, f64::min, f64::INFINITY))
}

pub fn dilate(img: &GrayImage, se: &StructuringElement) -> Result<GrayImage> {
    check_fit(img, se)?;
    Ok(rank_filter(img, se, f64::max, f64::NEG_INFINITY))
}

/// Grayscale opening: dilation of the erosion.
pub fn morph_open(img: &GrayImage, se: &StructuringElement) -> Result<GrayImage> {
    dilate(&erode(img, se)?, se)
}

/// Median over the `(2 radius + 1)^2` square window with replicate padding.
/// Radius 0 returns the input unchanged.
pub fn median_filter(img: &GrayImage, radius: usize) -> Result<GrayImage> {
    if radius == 0 {
        return Ok(img.clone());
    }
    if 2 * radius >= img.width().min(img.height()) {
        return Err(Error::TooLarge {
            what: "median window",
            size: 2 * radius + 1,
            width: img.width(),
            height: img.height(),
        });
    }
    let (w, h) = (img.width(), img.height());
    let src = img.data();
    let r = radius as isize;
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let mut window = Vec::with_capacity((2 * radius + 1).pow(2));
        for (x, o) in row.iter_mut().enumerate() {
            window.clear();
            for dy in -r..=r {
                let sy = (y as isize + dy).clamp(0, h as isize - 1) as usize;
                for dx in -r..=r {
                    let sx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
                    window.push(src[sy * w + sx]);
                }
            }
            let mid = window.len() / 2;
            *o = *window.select_nth_unstable_by(mid, f64::total_cmp).1;
        }
    });
    Ok(GrayImage::from_raw(w, h, out))
}
