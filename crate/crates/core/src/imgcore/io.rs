//! Raster input/output: 8-bit PGM (P2/P5) and PNG in, PNG out.

use std::fs;
use std::path::Path;

use image::{DynamicImage, ImageFormat};

use super::raster::{Field, GrayImage, Mask};
use crate::error::{Error, Result};

const PNG_SIGNATURE: &[u8] = &[0x89, b'P', b'N', b'G', b'\r', b'\n', 0x1a, b'\n'];

/// Loads a raster and rescales it to `[0, 1]` by the format's maximum value.
/// Color PNGs are converted to luminance first.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_image(&bytes).map_err(|e| match e {
        Error::Decode { reason, .. } => Error::Decode {
            path: path.to_path_buf(),
            reason,
        },
        other => other,
    })
}

/// Decodes an in-memory PGM or PNG.
pub fn decode_image(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.starts_with(b"P2") || bytes.starts_with(b"P5") {
        decode_pgm(bytes)
    } else if bytes.starts_with(PNG_SIGNATURE) {
        decode_png(bytes)
    } else {
        Err(decode_err("not a PGM (P2/P5) or PNG file"))
    }
}

fn decode_err(reason: impl Into<String>) -> Error {
    Error::Decode {
        path: Default::default(),
        reason: reason.into(),
    }
}

fn decode_png(bytes: &[u8]) -> Result<GrayImage> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)
        .map_err(|e| decode_err(e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w == 0 || h == 0 {
        return Err(Error::EmptyImage {
            width: w,
            height: h,
        });
    }
    let data: Vec<f64> = match img {
        DynamicImage::ImageLuma16(buf) => buf.pixels().map(|p| p.0[0] as f64 / 65535.0).collect(),
        DynamicImage::ImageLumaA16(_)
        | DynamicImage::ImageRgb16(_)
        | DynamicImage::ImageRgba16(_) => img
            .to_luma16()
            .pixels()
            .map(|p| p.0[0] as f64 / 65535.0)
            .collect(),
        other => other
            .to_luma8()
            .pixels()
            .map(|p| p.0[0] as f64 / 255.0)
            .collect(),
    };
    GrayImage::new(w, h, data)
}

struct PgmHeader {
    width: usize,
    height: usize,
    maxval: usize,
    data_start: usize,
}

/// Reads the next whitespace-delimited header token, skipping `#` comments.
fn next_token(bytes: &[u8], pos: &mut usize) -> Option<usize> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    std::str::from_utf8(&bytes[start..*pos]).ok()?.parse().ok()
}

fn parse_pgm_header(bytes: &[u8]) -> Result<PgmHeader> {
    let mut pos = 2;
    let mut field = |name: &str| next_token(bytes, &mut pos).ok_or_else(|| decode_err(format!("bad PGM {name}")));
    let width = field("width")?;
    let height = field("height")?;
    let maxval = field("maxval")?;
    // a single whitespace byte separates the header from binary data
    Ok(PgmHeader {
        width,
        height,
        maxval,
        data_start: pos + 1,
    })
}

fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let header = parse_pgm_header(bytes)?;
    let PgmHeader {
        width,
        height,
        maxval,
        ..
    } = header;
    if width == 0 || height == 0 {
        return Err(Error::EmptyImage { width, height });
    }
    if maxval == 0 || maxval > 255 {
        return Err(decode_err(format!(
            "PGM maxval {maxval} unsupported (8-bit only)"
        )));
    }
    let n = width * height;
    let raw: Vec<usize> = if bytes.starts_with(b"P5") {
        let body = bytes
            .get(header.data_start..header.data_start + n)
            .ok_or_else(|| decode_err("truncated PGM pixel data"))?;
        body.iter().map(|&b| b as usize).collect()
    } else {
        let mut pos = header.data_start - 1;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(next_token(bytes, &mut pos).ok_or_else(|| decode_err("truncated PGM pixel data"))?);
        }
        out
    };
    if let Some(&v) = raw.iter().find(|&&v| v > maxval) {
        return Err(decode_err(format!("PGM sample {v} exceeds maxval {maxval}")));
    }
    let scale = maxval as f64;
    GrayImage::new(width, height, raw.into_iter().map(|v| v as f64 / scale).collect())
}

/// Encodes an image as binary 8-bit PGM (P5).
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.data().iter().map(|&v| to_u8(v)));
    out
}

#[inline]
pub(crate) fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn write_png(path: &Path, buf: DynamicImage) -> Result<()> {
    buf.save_with_format(path, ImageFormat::Png)
        .map_err(|e| Error::Encode {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
}

pub fn save_gray_png(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let buf = image::GrayImage::from_raw(
        img.width() as u32,
        img.height() as u32,
        img.data().iter().map(|&v| to_u8(v)).collect(),
    )
    .expect("buffer length matches dimensions");
    write_png(path.as_ref(), DynamicImage::ImageLuma8(buf))
}

/// Saves a signed field after affine rescaling to `[0, 1]`.
pub fn save_field_png(field: &Field, path: impl AsRef<Path>) -> Result<()> {
    save_gray_png(&super::convolve::rescale01(field), path)
}

/// White for set pixels, black elsewhere.
pub fn save_mask_png(mask: &Mask, path: impl AsRef<Path>) -> Result<()> {
    let buf = image::GrayImage::from_raw(
        mask.width() as u32,
        mask.height() as u32,
        mask.data().iter().map(|&b| if b { 255 } else { 0 }).collect(),
    )
    .expect("buffer length matches dimensions");
    write_png(path.as_ref(), DynamicImage::ImageLuma8(buf))
}

pub fn save_rgb_png(width: usize, height: usize, rgb: Vec<u8>, path: impl AsRef<Path>) -> Result<()> {
    let buf = image::RgbImage::from_raw(width as u32, height as u32, rgb)
        .expect("buffer length matches dimensions");
    write_png(path.as_ref(), DynamicImage::ImageRgb8(buf))
}

/// Loads a binary mask: any nonzero sample is set.
pub fn load_mask(path: impl AsRef<Path>) -> Result<Mask> {
    let img = load_image(path)?;
    Mask::from_vec(
        img.width(),
        img.height(),
        img.data().iter().map(|&v| v >= 0.5).collect(),
    )
}
