use serde::{Deserialize, Serialize};

/// Circle with a sub-pixel center, in image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

impl Circle {
    pub fn new(cx: f64, cy: f64, r: f64) -> Self {
        Circle { cx, cy, r }
    }

    pub fn center_distance(&self, other: &Circle) -> f64 {
        (self.cx - other.cx).hypot(self.cy - other.cy)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (x - self.cx).hypot(y - self.cy) <= self.r
    }

    /// Distance from the center to the circle along direction `angle`,
    /// starting at `(ox, oy)` which must lie inside the circle.
    pub fn ray_distance(&self, ox: f64, oy: f64, angle: f64) -> Option<f64> {
        let (dx, dy) = (angle.cos(), angle.sin());
        let (px, py) = (ox - self.cx, oy - self.cy);
        let b = px * dx + py * dy;
        let c = px * px + py * py - self.r * self.r;
        let disc = b * b - c;
        if disc < 0.0 {
            return None;
        }
        let t = -b + disc.sqrt();
        (t >= 0.0).then_some(t)
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.r * self.r
    }
}

/// Wraps an angle into `[0, 2 pi)`.
pub fn wrap_angle(a: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let w = a.rem_euclid(tau);
    if w >= tau { 0.0 } else { w }
}
