//! Radial scanning of an edge map from a reference point.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::imgcore::EdgeMap;

/// Bilinear edge membership above which a sample counts as touching an edge.
const HIT_LEVEL: f64 = 0.25;
/// Longest run of nonzero samples (in steps) merged into one hit.
const MAX_RUN: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaySample {
    pub angle: f64,
    /// Distance from the scan center to the first edge, if any.
    pub hit: Option<f64>,
}

/// First-hit radii over a uniform angular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub center: (f64, f64),
    pub samples: Vec<RaySample>,
}

impl RadialProfile {
    /// Hit positions in image coordinates.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.samples
            .iter()
            .filter_map(|s| {
                s.hit
                    .map(|r| (self.center.0 + r * s.angle.cos(), self.center.1 + r * s.angle.sin()))
            })
            .collect()
    }

    pub fn hit_count(&self) -> usize {
        self.samples.iter().filter(|s| s.hit.is_some()).count()
    }

    /// Fraction of rays with a hit.
    pub fn coverage(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            self.hit_count() as f64 / self.samples.len() as f64
        }
    }
}

/// Angle of ray `k` out of `n` uniformly spaced rays.
#[inline]
pub fn ray_angle(k: usize, n: usize) -> f64 {
    TAU * k as f64 / n as f64
}

/// Every edge crossing along one ray within `[r_min, r_max]`.
///
/// Samples are taken every `step` pixels and read by bilinear interpolation.
/// A contiguous run of nonzero samples whose peak reaches the hit level is
/// one crossing, located at the membership-weighted mean radius of the run.
pub fn ray_hits(edges: &EdgeMap, center: (f64, f64), angle: f64, r_min: f64, r_max: f64, step: f64) -> Vec<f64> {
    let (dx, dy) = (angle.cos(), angle.sin());
    let count = ((r_max - r_min) / step + 1e-9).floor() as usize + 1;
    let radius = |i: usize| r_min + i as f64 * step;
    let values: Vec<f64> = (0..count)
        .map(|i| {
            let r = radius(i);
            edges.bilinear(center.0 + r * dx, center.1 + r * dy)
        })
        .collect();

    let mut hits = Vec::new();
    let mut i = 0;
    while i < count {
        if values[i] <= 0.0 {
            i += 1;
            continue;
        }
        let start = i;
        while i < count && values[i] > 0.0 && i - start < MAX_RUN {
            i += 1;
        }
        let run = &values[start..i];
        if run.iter().any(|&v| v > HIT_LEVEL) {
            let weight: f64 = run.iter().sum();
            let moment: f64 = run.iter().enumerate().map(|(j, v)| radius(start + j) * v).sum();
            hits.push(moment / weight);
        }
    }
    hits
}

/// Scans `n_angles` rays outward from `center` and records the first edge
/// crossing on each.
pub fn radial_scan(
    edges: &EdgeMap,
    center: (f64, f64),
    r_min: f64,
    r_max: f64,
    n_angles: usize,
    step: f64,
) -> Result<RadialProfile> {
    let (x, y) = center;
    if !(x >= 0.0 && y >= 0.0 && x <= (edges.width() - 1) as f64 && y <= (edges.height() - 1) as f64) {
        return Err(Error::OutsideImage { x, y });
    }
    if !(r_min >= 0.0 && r_min < r_max) {
        return Err(Error::param("r_min/r_max", format!("need 0 <= r_min < r_max, got {r_min}..{r_max}")));
    }
    if n_angles == 0 || !(step > 0.0) {
        return Err(Error::param("n_angles/step", "must be positive"));
    }
    let samples = (0..n_angles)
        .map(|k| {
            let angle = ray_angle(k, n_angles);
            RaySample {
                angle,
                hit: ray_hits(edges, center, angle, r_min, r_max, step).first().copied(),
            }
        })
        .collect();
    Ok(RadialProfile { center, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Circle;
    use crate::imgcore::Mask;

    fn ring(w: usize, h: usize, c: Circle) -> Mask {
        Mask::from_fn(w, h, |x, y| ((x as f64 - c.cx).hypot(y as f64 - c.cy) - c.r).abs() < 0.5).unwrap()
    }

    #[test]
    fn perfect_circle_all_hit() {
        let edges = ring(140, 140, Circle::new(70.0, 70.0, 30.0));
        let p = radial_scan(&edges, (70.0, 70.0), 10.0, 60.0, 360, 0.5).unwrap();
        assert_eq!(p.hit_count(), 360);
        for s in &p.samples {
            assert!((s.hit.unwrap() - 30.0).abs() <= 0.5, "angle {} hit {:?}", s.angle, s.hit);
        }
    }

    #[test]
    fn broken_circle_misses_gap() {
        let c = Circle::new(70.0, 70.0, 30.0);
        let full = ring(140, 140, c);
        // remove the arc with angles in (0, 90) degrees, i.e. x > cx and y > cy
        let edges = Mask::from_fn(140, 140, |x, y| full.get(x, y) && !(x as f64 > 70.0 && y as f64 > 70.0)).unwrap();
        let p = radial_scan(&edges, (70.0, 70.0), 10.0, 60.0, 360, 0.5).unwrap();
        let hits = p.hit_count();
        assert!((268..=274).contains(&hits), "hits {hits}");
        for s in &p.samples {
            let deg = s.angle.to_degrees();
            if deg > 3.0 && deg < 87.0 {
                assert!(s.hit.is_none());
            }
        }
    }

    #[test]
    fn offset_center_matches_ray_circle_intersection() {
        let c = Circle::new(70.0, 70.0, 30.0);
        let edges = ring(140, 140, c);
        let origin = (73.0, 70.0);
        let p = radial_scan(&edges, origin, 5.0, 60.0, 360, 0.5).unwrap();
        for s in &p.samples {
            let expected = c.ray_distance(origin.0, origin.1, s.angle).unwrap();
            assert!((s.hit.unwrap() - expected).abs() <= 0.75, "angle {} got {:?} want {expected}", s.angle, s.hit);
        }
    }

    #[test]
    fn rejects_outside_center() {
        let edges = Mask::new(10, 10).unwrap();
        assert!(matches!(radial_scan(&edges, (12.0, 3.0), 1.0, 5.0, 36, 0.5), Err(Error::OutsideImage { .. })));
    }
}
