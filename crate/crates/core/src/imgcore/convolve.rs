//! Linear convolution with replicate-edge padding.
//!
//! [`convolve_direct`] is the reference. [`convolve`] runs kernels that carry
//! separable terms as 1-D passes and otherwise falls back to the direct loop.
//! Both are row-parallel; each output sample is computed by a fixed sequence
//! of operations, so results do not depend on the thread count.

use rayon::prelude::*;

use super::kernel::{Kernel2D, SeparableTerm};
use super::raster::{Field, GrayImage};
use crate::error::{Error, Result};

/// Read access to a row-major scalar raster.
pub trait Samples {
    fn dims(&self) -> (usize, usize);
    fn samples(&self) -> &[f64];
}

impl Samples for GrayImage {
    fn dims(&self) -> (usize, usize) {
        (self.width(), self.height())
    }
    fn samples(&self) -> &[f64] {
        self.data()
    }
}

impl Samples for Field {
    fn dims(&self) -> (usize, usize) {
        (self.width(), self.height())
    }
    fn samples(&self) -> &[f64] {
        self.data()
    }
}

fn check_fit(k: &Kernel2D, width: usize, height: usize) -> Result<()> {
    if k.size() > width.min(height) {
        return Err(Error::TooLarge {
            what: "kernel",
            size: k.size(),
            width,
            height,
        });
    }
    Ok(())
}

#[inline]
fn clamp_index(i: isize, len: usize) -> usize {
    i.clamp(0, len as isize - 1) as usize
}

/// Direct 2-D convolution, `O(n^2)` per sample.
pub fn convolve_direct(input: &impl Samples, k: &Kernel2D) -> Result<Field> {
    let (w, h) = input.dims();
    check_fit(k, w, h)?;
    let src = input.samples();
    let n = k.size();
    let r = k.radius() as isize;
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in 0..n {
                let sy = clamp_index(y as isize + r - i as isize, h);
                let line = &src[sy * w..(sy + 1) * w];
                for j in 0..n {
                    let sx = clamp_index(x as isize + r - j as isize, w);
                    acc += k.tap(i, j) * line[sx];
                }
            }
            *o = acc;
        }
    });
    Ok(Field::from_raw(w, h, out))
}

/// Convolution through the kernel's separable terms when it has them and they
/// are cheaper than the direct loop.
pub fn convolve(input: &impl Samples, k: &Kernel2D) -> Result<Field> {
    let (w, h) = input.dims();
    check_fit(k, w, h)?;
    let terms = k.separable_terms();
    let n = k.size();
    if terms.is_empty() || 2 * terms.len() * n >= n * n {
        return convolve_direct(input, k);
    }
    let src = input.samples();
    let mut acc = vec![0.0; w * h];
    for term in terms {
        accumulate_term(src, w, h, term, &mut acc);
    }
    Ok(Field::from_raw(w, h, acc))
}

/// Horizontal 1-D convolution of every row, replicate padding.
fn horizontal_pass(src: &[f64], w: usize, taps: &[f64]) -> Vec<f64> {
    let n = taps.len();
    let r = n / 2;
    // reversed taps turn the convolution into a sliding dot product
    let rev: Vec<f64> = taps.iter().rev().copied().collect();
    let mut out = vec![0.0; src.len()];
    out.par_chunks_mut(w)
        .zip(src.par_chunks(w))
        .for_each(|(dst, line)| {
            let mut padded = Vec::with_capacity(w + 2 * r);
            padded.extend(std::iter::repeat_n(line[0], r));
            padded.extend_from_slice(line);
            padded.extend(std::iter::repeat_n(line[w - 1], r));
            for (x, o) in dst.iter_mut().enumerate() {
                *o = padded[x..x + n]
                    .iter()
                    .zip(&rev)
                    .map(|(a, b)| a * b)
                    .sum();
            }
        });
    out
}

fn accumulate_term(src: &[f64], w: usize, h: usize, term: &SeparableTerm, acc: &mut [f64]) {
    let tmp = horizontal_pass(src, w, &term.horizontal);
    let n = term.vertical.len();
    let r = (n / 2) as isize;
    acc.par_chunks_mut(w).enumerate().for_each(|(y, dst)| {
        let mut row = vec![0.0; w];
        for (i, &t) in term.vertical.iter().enumerate() {
            let sy = clamp_index(y as isize + r - i as isize, h);
            let line = &tmp[sy * w..(sy + 1) * w];
            for (o, &v) in row.iter_mut().zip(line) {
                *o += t * v;
            }
        }
        for (o, v) in dst.iter_mut().zip(row) {
            *o += v;
        }
    });
}

/// 1-D Gaussian smoothing along both axes with replicate padding.
pub fn smooth_separable(input: &impl Samples, taps: &[f64]) -> Result<Field> {
    let (w, h) = input.dims();
    if taps.len() > w.min(h) {
        return Err(Error::TooLarge {
            what: "kernel",
            size: taps.len(),
            width: w,
            height: h,
        });
    }
    let mut acc = vec![0.0; w * h];
    accumulate_term(
        input.samples(),
        w,
        h,
        &SeparableTerm {
            vertical: taps.to_vec(),
            horizontal: taps.to_vec(),
        },
        &mut acc,
    );
    Ok(Field::from_raw(w, h, acc))
}

/// Affine map of the field's `[min, max]` onto `[0, 1]`. A constant field
/// maps to 0.5 everywhere.
pub fn rescale01(field: &Field) -> GrayImage {
    let (lo, hi) = field.min_max();
    let data = if hi > lo {
        let span = hi - lo;
        field
            .data()
            .iter()
            .map(|v| ((v - lo) / span).clamp(0.0, 1.0))
            .collect()
    } else {
        vec![0.5; field.data().len()]
    };
    GrayImage::from_raw(field.width(), field.height(), data)
}
