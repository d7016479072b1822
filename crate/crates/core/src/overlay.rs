//! Result overlays drawn over the input image.

use std::f64::consts::TAU;

use crate::boundary::SegmentationResult;
use crate::geometry::Circle;
use crate::imgcore::GrayImage;

pub const PUPIL_COLOR: [u8; 3] = [0, 255, 0];
pub const IRIS_COLOR: [u8; 3] = [255, 0, 0];
pub const OCCLUSION_COLOR: [u8; 3] = [255, 255, 0];
pub const AXIS_COLOR: [u8; 3] = [0, 160, 255];

/// RGB raster, row-major, three bytes per pixel.
pub struct Canvas {
    width: usize,
    height: usize,
    rgb: Vec<u8>,
}

impl Canvas {
    pub fn from_gray(img: &GrayImage) -> Self {
        let rgb = img
            .data()
            .iter()
            .flat_map(|&v| {
                let b = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
                [b, b, b]
            })
            .collect();
        Canvas { width: img.width(), height: img.height(), rgb }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }

    pub fn into_rgb(self) -> Vec<u8> {
        self.rgb
    }

    fn plot(&mut self, x: f64, y: f64, color: [u8; 3]) {
        let (xi, yi) = (x.round(), y.round());
        if xi < 0.0 || yi < 0.0 || xi >= self.width as f64 || yi >= self.height as f64 {
            return;
        }
        let i = 3 * (yi as usize * self.width + xi as usize);
        self.rgb[i..i + 3].copy_from_slice(&color);
    }

    /// Draws the circle, choosing each point's color from its angle.
    pub fn circle_with(&mut self, c: &Circle, color: impl Fn(f64, f64) -> [u8; 3]) {
        let steps = ((TAU * c.r * 2.0).ceil() as usize).max(16);
        for k in 0..steps {
            let t = TAU * k as f64 / steps as f64;
            let (x, y) = (c.cx + c.r * t.cos(), c.cy + c.r * t.sin());
            self.plot(x, y, color(x, y));
        }
    }

    pub fn line(&mut self, from: (f64, f64), to: (f64, f64), color: [u8; 3]) {
        let len = (to.0 - from.0).hypot(to.1 - from.1);
        let steps = (len * 2.0).ceil().max(1.0) as usize;
        for k in 0..=steps {
            let t = k as f64 / steps as f64;
            self.plot(from.0 + t * (to.0 - from.0), from.1 + t * (to.1 - from.1), color);
        }
    }
}

/// Pupil circle, iris circle with occluded arcs highlighted, and the eye
/// axis through the pupil center.
pub fn render_overlay(img: &GrayImage, result: &SegmentationResult) -> Canvas {
    let mut canvas = Canvas::from_gray(img);
    let p = result.pupil;
    let (c, s) = (result.orientation.cos(), result.orientation.sin());
    let reach = result.iris.r;
    canvas.line((p.cx - reach * c, p.cy - reach * s), (p.cx + reach * c, p.cy + reach * s), AXIS_COLOR);
    canvas.circle_with(&result.iris, |x, y| {
        if result.gap_angles.contains_angle((y - p.cy).atan2(x - p.cx)) {
            OCCLUSION_COLOR
        } else {
            IRIS_COLOR
        }
    });
    canvas.circle_with(&p, |_, _| PUPIL_COLOR);
    canvas
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_is_drawn_on_its_radius() {
        let img = GrayImage::filled(80, 80, 0.5).unwrap();
        let mut canvas = Canvas::from_gray(&img);
        let c = Circle::new(40.0, 40.0, 20.0);
        canvas.circle_with(&c, |_, _| PUPIL_COLOR);
        let mut drawn = 0;
        for y in 0..80 {
            for x in 0..80 {
                if canvas.pixel(x, y) == PUPIL_COLOR {
                    drawn += 1;
                    let d = (x as f64 - 40.0).hypot(y as f64 - 40.0);
                    assert!((d - 20.0).abs() < 1.0);
                }
            }
        }
        assert!(drawn > 100);
        assert_eq!(canvas.pixel(40, 40), [128, 128, 128]);
    }

    #[test]
    fn off_canvas_points_are_skipped() {
        let img = GrayImage::filled(10, 10, 0.0).unwrap();
        let mut canvas = Canvas::from_gray(&img);
        canvas.line((-20.0, 5.0), (30.0, 5.0), AXIS_COLOR);
        assert!((0..10).all(|x| canvas.pixel(x, 5) == AXIS_COLOR));
    }
}
