//! Pupillary refinement, limbic boundary search and occlusion marking.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::fit::{fit_circle, fit_with_refit};
use super::scan::{radial_scan, ray_angle, ray_hits, RadialProfile, RaySample};
use super::zones::ZonePartition;
use crate::config::BoundaryParams;
use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Circle};
use crate::imgcore::{EdgeMap, Mask};

/// Subset of a uniform grid of `n` ray angles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AngleSet {
    members: Vec<bool>,
}

/// Contiguous run of grid angles, `start..=end` in radians. `end` may exceed
/// `2 pi` for a run that wraps past zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleRun {
    pub start: f64,
    pub end: f64,
}

impl AngleSet {
    pub fn empty(n: usize) -> Self {
        AngleSet { members: vec![false; n] }
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> bool) -> Self {
        AngleSet {
            members: (0..n).map(|k| f(ray_angle(k, n))).collect(),
        }
    }

    pub fn grid_size(&self) -> usize {
        self.members.len()
    }

    pub fn step(&self) -> f64 {
        TAU / self.members.len() as f64
    }

    pub fn insert(&mut self, k: usize) {
        self.members[k] = true;
    }

    pub fn contains_index(&self, k: usize) -> bool {
        self.members[k]
    }

    /// Whether `angle` falls in the grid cell of a member.
    pub fn contains_angle(&self, angle: f64) -> bool {
        let n = self.members.len();
        let k = (wrap_angle(angle) / self.step()).round() as usize % n;
        self.members[k]
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Total angular measure, counting one grid step per member.
    pub fn measure(&self) -> f64 {
        self.len() as f64 * self.step()
    }

    pub fn intersection_len(&self, other: &AngleSet) -> usize {
        self.members.iter().zip(&other.members).filter(|(a, b)| **a && **b).count()
    }

    pub fn union_len(&self, other: &AngleSet) -> usize {
        self.members.iter().zip(&other.members).filter(|(a, b)| **a || **b).count()
    }

    /// Fills non-member holes of at most `max_hole` consecutive angles that
    /// lie between members.
    pub fn fill_holes(&mut self, max_hole: usize) {
        self.invert();
        self.drop_short_runs(max_hole);
        self.invert();
    }

    /// Removes member runs of at most `max_len` consecutive angles.
    pub fn drop_short_runs(&mut self, max_len: usize) {
        let n = self.members.len();
        if max_len == 0 || self.len() == n || self.is_empty() {
            return;
        }
        let start = self.members.iter().position(|&m| !m).expect("not full");
        let mut i = 0;
        while i < n {
            let k = (start + i) % n;
            if !self.members[k] {
                i += 1;
                continue;
            }
            let mut len = 0;
            while i + len < n && self.members[(start + i + len) % n] {
                len += 1;
            }
            if len <= max_len {
                for j in 0..len {
                    self.members[(start + i + j) % n] = false;
                }
            }
            i += len;
        }
    }

    fn invert(&mut self) {
        for m in &mut self.members {
            *m = !*m;
        }
    }

    /// Maximal runs of consecutive members, merged across the zero angle.
    pub fn runs(&self) -> Vec<AngleRun> {
        let n = self.members.len();
        if self.len() == n {
            return vec![AngleRun { start: 0.0, end: TAU - self.step() }];
        }
        // start scanning just after a non-member so no run is split
        let offset = self.members.iter().position(|&m| !m).unwrap_or(0);
        let mut runs = Vec::new();
        let mut current: Option<(usize, usize)> = None;
        for i in 1..=n {
            let k = (offset + i) % n;
            let unwrapped = offset + i;
            if self.members[k] {
                current = Some(match current {
                    Some((s, _)) => (s, unwrapped),
                    None => (unwrapped, unwrapped),
                });
            } else if let Some((s, e)) = current.take() {
                runs.push((s, e));
            }
        }
        if let Some(run) = current {
            runs.push(run);
        }
        let step = self.step();
        let mut out: Vec<AngleRun> = runs
            .into_iter()
            .map(|(s, e)| {
                let start = (s % n) as f64 * step;
                AngleRun { start, end: start + (e - s) as f64 * step }
            })
            .collect();
        out.sort_by(|a, b| a.start.total_cmp(&b.start));
        out
    }
}

/// Outcome of the limbic search.
#[derive(Debug, Clone, PartialEq)]
pub struct LimbicBoundary {
    pub iris: Circle,
    /// Occlusion-zone angles, seen from the pupil center, with no boundary
    /// point continuing the stable-zone contour.
    pub gap_angles: AngleSet,
    /// Trimmed mean of the stable-zone radii.
    pub stable_radius: f64,
    pub stable_coverage: f64,
    /// Every accepted boundary hit, as a profile around the pupil center.
    pub profile: RadialProfile,
}

fn trimmed_mean(values: &mut [f64], trim: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let cut = (values.len() as f64 * trim).floor() as usize;
    let kept = &values[cut..values.len() - cut];
    kept.iter().sum::<f64>() / kept.len() as f64
}

/// Finds the limbic boundary.
///
/// Stable-zone rays from the pupil center take their first edge beyond
/// `limbic_min * r` (and away from the pupillary circle); the trimmed mean of
/// these radii is the provisional iris radius. Occlusion-zone rays then look
/// inside `radius * (1 +- occlusion_band)` for an edge that continues the
/// circle fitted to the stable hits. Rays that find none are gaps. The iris
/// circle is fitted to all accepted hits.
pub fn locate_limbic(
    edges: &EdgeMap,
    pupil: &Circle,
    zones: &ZonePartition,
    params: &BoundaryParams,
) -> Result<LimbicBoundary> {
    locate_limbic_from(edges, pupil, (pupil.cx, pupil.cy), zones, params)
}

/// [`locate_limbic`] with rays cast from `origin`, a point inside the pupil,
/// instead of the pupil center. Ray angles and gaps are then seen from
/// `origin`.
pub fn locate_limbic_from(
    edges: &EdgeMap,
    pupil: &Circle,
    origin: (f64, f64),
    zones: &ZonePartition,
    params: &BoundaryParams,
) -> Result<LimbicBoundary> {
    let n = params.n_angles;
    let step = params.radial_step;
    let mut samples: Vec<RaySample> = (0..n)
        .map(|k| RaySample { angle: ray_angle(k, n), hit: None })
        .collect();

    let stable: Vec<usize> = (0..n).filter(|&k| zones.zone_of(samples[k].angle).is_stable()).collect();
    let (r_lo, r_hi) = (params.limbic_min * pupil.r, params.limbic_max * pupil.r);
    let mut stable_hits = 0;
    for &k in &stable {
        let angle = samples[k].angle;
        let (dx, dy) = (angle.cos(), angle.sin());
        samples[k].hit = ray_hits(edges, origin, angle, r_lo, r_hi, step).into_iter().find(|&r| {
            let (x, y) = (origin.0 + r * dx, origin.1 + r * dy);
            ((x - pupil.cx).hypot(y - pupil.cy) - pupil.r).abs() > params.pupil_exclusion
        });
        stable_hits += samples[k].hit.is_some() as usize;
    }
    let coverage = if stable.is_empty() { 0.0 } else { stable_hits as f64 / stable.len() as f64 };
    if coverage < params.min_stable_coverage {
        return Err(Error::LimbicNotFound {
            coverage: coverage * 100.0,
            required: params.min_stable_coverage * 100.0,
        });
    }

    let mut radii: Vec<f64> = samples.iter().filter_map(|s| s.hit).collect();
    let stable_radius = trimmed_mean(&mut radii, params.stable_trim);
    let stable_profile = RadialProfile { center: origin, samples: samples.clone() };
    let reference = fit_circle(&stable_profile, params.inlier_tol)
        .ok()
        .filter(|c| c.contains(origin.0, origin.1))
        .unwrap_or(Circle::new(origin.0, origin.1, stable_radius));

    let (band_lo, band_hi) = (
        stable_radius * (1.0 - params.occlusion_band),
        stable_radius * (1.0 + params.occlusion_band),
    );
    let mut gaps = AngleSet::empty(n);
    for k in (0..n).filter(|k| !stable.contains(k)) {
        let angle = samples[k].angle;
        let expected = reference
            .ray_distance(origin.0, origin.1, angle)
            .unwrap_or(stable_radius);
        let best = ray_hits(edges, origin, angle, band_lo, band_hi, step)
            .into_iter()
            .min_by(|a, b| (a - expected).abs().total_cmp(&(b - expected).abs()))
            .filter(|r| (r - expected).abs() <= params.continuity_tol);
        match best {
            Some(r) => samples[k].hit = Some(r),
            None => gaps.insert(k),
        }
    }

    gaps.fill_holes(params.gap_fill);
    gaps.drop_short_runs(params.min_gap_run);
    let profile = RadialProfile { center: origin, samples };
    let iris = fit_with_refit(&profile.points(), params.inlier_tol)?;
    Ok(LimbicBoundary {
        iris,
        gap_angles: gaps,
        stable_radius,
        stable_coverage: coverage,
        profile,
    })
}

/// Annulus pixels between the pupillary and limbic circles whose angle,
/// seen from the pupil center, lies in a gap run.
pub fn occlusion_mask(edges: &EdgeMap, iris: &Circle, pupil: &Circle, gap_angles: &AngleSet) -> Mask {
    let (w, h) = (edges.width(), edges.height());
    let mut mask = Mask::empty_like(w, h);
    if gap_angles.is_empty() {
        return mask;
    }
    let x0 = (iris.cx - iris.r).floor().max(0.0) as usize;
    let y0 = (iris.cy - iris.r).floor().max(0.0) as usize;
    let x1 = ((iris.cx + iris.r).ceil() as usize).min(w - 1);
    let y1 = ((iris.cy + iris.r).ceil() as usize).min(h - 1);
    for y in y0..=y1 {
        for x in x0..=x1 {
            let (fx, fy) = (x as f64, y as f64);
            if iris.contains(fx, fy) && !pupil.contains(fx, fy) {
                let angle = (fy - pupil.cy).atan2(fx - pupil.cx);
                if gap_angles.contains_angle(angle) {
                    mask.set(x, y, true);
                }
            }
        }
    }
    mask
}

/// Pupillary circle refined from zero crossings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinedPupil {
    pub circle: Circle,
    /// False when the fit failed and the coarse circle was kept.
    pub refined: bool,
}

/// Scans `[0.5 r, 1.5 r]` around the coarse circle and fits the pupillary
/// boundary, keeping the coarse circle when no plausible fit exists.
pub fn refine_pupil(edges: &EdgeMap, coarse: &Circle, params: &BoundaryParams) -> RefinedPupil {
    let fallback = RefinedPupil { circle: *coarse, refined: false };
    let Ok(profile) = radial_scan(
        edges,
        (coarse.cx, coarse.cy),
        0.5 * coarse.r,
        1.5 * coarse.r,
        params.n_angles,
        params.radial_step,
    ) else {
        return fallback;
    };
    match fit_circle(&profile, params.inlier_tol) {
        Ok(c) if c.r > 0.5 * coarse.r && c.r < 1.5 * coarse.r && c.center_distance(coarse) < 0.5 * coarse.r => {
            RefinedPupil { circle: c, refined: true }
        }
        _ => fallback,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::zones::partition_zones;
    use std::f64::consts::PI;

    fn ring(w: usize, h: usize, c: Circle, keep: impl Fn(f64) -> bool) -> Mask {
        Mask::from_fn(w, h, |x, y| {
            let (dx, dy) = (x as f64 - c.cx, y as f64 - c.cy);
            (dx.hypot(dy) - c.r).abs() < 0.5 && keep(dy.atan2(dx))
        })
        .unwrap()
    }

    fn union(a: &Mask, b: &Mask) -> Mask {
        Mask::from_fn(a.width(), a.height(), |x, y| a.get(x, y) || b.get(x, y)).unwrap()
    }

    #[test]
    fn angle_runs_wrap() {
        let set = AngleSet::from_fn(360, |a| {
            let d = a.to_degrees();
            d <= 10.5 || d >= 349.5 || (100.0..=119.5).contains(&d)
        });
        let runs = set.runs();
        assert_eq!(runs.len(), 2);
        assert!((runs[0].start.to_degrees() - 100.0).abs() < 1e-9 && (runs[0].end.to_degrees() - 119.0).abs() < 1e-9);
        assert!((runs[1].start.to_degrees() - 350.0).abs() < 1e-9 && (runs[1].end.to_degrees() - 370.0).abs() < 1e-9);
        assert!(AngleSet::empty(360).runs().is_empty());
        assert_eq!(AngleSet::from_fn(8, |_| true).runs().len(), 1);
    }

    #[test]
    fn hole_filling_and_short_runs() {
        let mut set = AngleSet::empty(36);
        for k in [0, 1, 2, 4, 5, 6, 20, 35] {
            set.insert(k);
        }
        let mut filled = set.clone();
        filled.fill_holes(1);
        assert_eq!(filled.len(), 9);
        assert!(filled.contains_index(3));
        filled.drop_short_runs(1);
        assert_eq!(filled.len(), 8);
        assert!(!filled.contains_index(20) && filled.contains_index(35));
        set.drop_short_runs(3);
        assert_eq!(set.len(), 4);
        assert!(set.contains_index(35) && !set.contains_index(5));
    }

    #[test]
    fn clean_limbic_ring() {
        let pupil = Circle::new(150.0, 120.0, 25.0);
        let iris = Circle::new(151.0, 119.0, 60.0);
        let edges = union(&ring(300, 240, pupil, |_| true), &ring(300, 240, iris, |_| true));
        let zones = partition_zones(0.0, PI / 6.0).unwrap();
        let b = locate_limbic(&edges, &pupil, &zones, &BoundaryParams::default()).unwrap();
        assert!(b.gap_angles.is_empty());
        assert!((b.iris.r - 60.0).abs() <= 1.0);
        assert!(b.iris.center_distance(&iris) < 0.5);
    }

    #[test]
    fn occluded_upper_arc_becomes_gap() {
        let pupil = Circle::new(150.0, 120.0, 25.0);
        let iris = Circle::new(150.0, 120.0, 60.0);
        // drop 100 degrees centered straight up (-90 degrees)
        let occluded = |a: f64| (a.to_degrees() + 90.0).abs() <= 50.0;
        let edges = union(&ring(300, 240, pupil, |_| true), &ring(300, 240, iris, |a| !occluded(a)));
        let zones = partition_zones(0.0, PI / 6.0).unwrap();
        let b = locate_limbic(&edges, &pupil, &zones, &BoundaryParams::default()).unwrap();
        let planted = AngleSet::from_fn(360, |a| occluded(wrap_angle(a + PI) - PI));
        let inter = b.gap_angles.intersection_len(&planted) as f64;
        assert!(inter / planted.len() as f64 > 0.9);
        assert!(b.gap_angles.len() <= planted.len() + 20);
        assert!((b.iris.r - 60.0).abs() <= 1.5);

        let mask = occlusion_mask(&edges, &b.iris, &pupil, &b.gap_angles);
        let sector = (b.gap_angles.measure() / TAU) * PI * (60.0f64.powi(2) - 25.0f64.powi(2));
        assert!((mask.count() as f64 - sector).abs() / sector < 0.1);
    }

    #[test]
    fn limbic_not_found_without_edges() {
        let pupil = Circle::new(50.0, 50.0, 10.0);
        let edges = ring(100, 100, pupil, |_| true);
        let zones = partition_zones(0.0, PI / 6.0).unwrap();
        assert!(matches!(
            locate_limbic(&edges, &pupil, &zones, &BoundaryParams::default()),
            Err(Error::LimbicNotFound { .. })
        ));
    }

    #[test]
    fn empty_gaps_give_empty_mask() {
        let edges = Mask::new(100, 100).unwrap();
        let m = occlusion_mask(&edges, &Circle::new(50.0, 50.0, 40.0), &Circle::new(50.0, 50.0, 15.0), &AngleSet::empty(360));
        assert!(m.is_empty());
    }

    #[test]
    fn sixty_degree_gap_area() {
        let edges = Mask::new(200, 200).unwrap();
        let (iris, pupil) = (Circle::new(100.0, 100.0, 70.0), Circle::new(100.0, 100.0, 25.0));
        let gaps = AngleSet::from_fn(360, |a| (a.to_degrees() - 200.0).abs() < 29.5);
        assert_eq!(gaps.len(), 59);
        let m = occlusion_mask(&edges, &iris, &pupil, &gaps);
        let expected = gaps.measure() / TAU * PI * (70.0f64.powi(2) - 25.0f64.powi(2));
        assert!((m.count() as f64 - expected).abs() / expected < 0.1);
    }

    #[test]
    fn refine_offset_and_small_coarse() {
        let truth = Circle::new(100.0, 100.0, 30.0);
        let edges = ring(200, 200, truth, |_| true);
        let coarse = Circle::new(103.0, 100.0, 27.0);
        let r = refine_pupil(&edges, &coarse, &BoundaryParams::default());
        assert!(r.refined);
        assert!(r.circle.center_distance(&truth) < 0.5 && (r.circle.r - 30.0).abs() < 0.5);
    }

    #[test]
    fn refine_broken_circle() {
        let truth = Circle::new(100.0, 100.0, 30.0);
        let edges = ring(200, 200, truth, |a| !((a.to_degrees() + 90.0).abs() < 60.0));
        let r = refine_pupil(&edges, &Circle::new(101.5, 98.0, 28.0), &BoundaryParams::default());
        assert!(r.refined);
        assert!(r.circle.center_distance(&truth) < 1.0 && (r.circle.r - 30.0).abs() < 1.0);
    }

    #[test]
    fn refine_falls_back_without_edges() {
        let coarse = Circle::new(50.0, 50.0, 20.0);
        let r = refine_pupil(&Mask::new(100, 100).unwrap(), &coarse, &BoundaryParams::default());
        assert!(!r.refined);
        assert_eq!(r.circle, coarse);
    }
}
