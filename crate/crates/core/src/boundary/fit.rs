//! Algebraic (Kasa) circle fitting with one inlier re-fit.

use std::f64::consts::{FRAC_PI_2, TAU};

use super::scan::RadialProfile;
use crate::error::{Error, Result};
use crate::geometry::Circle;

/// Least-squares circle minimizing `sum (x^2 + y^2 + D x + E y + F)^2`.
///
/// Points are centered and scaled before solving, which keeps the normal
/// equations well conditioned and makes the fit equivariant under
/// translation and rotation up to rounding.
pub fn fit_points(points: &[(f64, f64)]) -> Result<Circle> {
    if points.len() < 3 {
        return Err(Error::BoundaryNotRecoverable(format!("{} points, need at least 3", points.len())));
    }
    let n = points.len() as f64;
    let (mx, my) = points
        .iter()
        .fold((0.0, 0.0), |(ax, ay), &(x, y)| (ax + x / n, ay + y / n));
    let scale = (points
        .iter()
        .map(|&(x, y)| (x - mx).powi(2) + (y - my).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    if !(scale > 0.0) {
        return Err(Error::BoundaryNotRecoverable("coincident points".into()));
    }

    let mut a = [[0.0f64; 3]; 3];
    let mut b = [0.0f64; 3];
    for &(x, y) in points {
        let u = (x - mx) / scale;
        let v = (y - my) / scale;
        let z = u * u + v * v;
        let row = [u, v, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] += row[i] * row[j];
            }
            b[i] -= row[i] * z;
        }
    }
    let [d, e, f] = solve3(a, b).ok_or_else(|| Error::BoundaryNotRecoverable("collinear points".into()))?;
    let r2 = (d * d + e * e) / 4.0 - f;
    if !(r2 > 0.0) || !r2.is_finite() {
        return Err(Error::BoundaryNotRecoverable("degenerate circle".into()));
    }
    Ok(Circle::new(mx - d / 2.0 * scale, my - e / 2.0 * scale, r2.sqrt() * scale))
}

/// Gaussian elimination with partial pivoting; `None` for a (near) singular
/// system.
#[allow(clippy::needless_range_loop)]
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    let norm = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= 1e-10 * norm {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let factor = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}

/// Angular extent covered by a set of angles: the full turn minus the
/// largest gap between circularly consecutive angles.
pub fn angular_span(angles: &[f64]) -> f64 {
    if angles.len() < 2 {
        return 0.0;
    }
    let mut sorted: Vec<f64> = angles.iter().map(|a| a.rem_euclid(TAU)).collect();
    sorted.sort_by(f64::total_cmp);
    let mut largest = sorted[0] + TAU - sorted[sorted.len() - 1];
    for pair in sorted.windows(2) {
        largest = largest.max(pair[1] - pair[0]);
    }
    TAU - largest
}

/// Circle through `points` after discarding points farther than `inlier_tol`
/// from a first fit over all of them.
pub fn fit_with_refit(points: &[(f64, f64)], inlier_tol: f64) -> Result<Circle> {
    let first = fit_points(points)?;
    let inliers: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(x, y)| ((x - first.cx).hypot(y - first.cy) - first.r).abs() <= inlier_tol)
        .collect();
    if inliers.len() < 3 || inliers.len() == points.len() {
        return Ok(first);
    }
    fit_points(&inliers).or(Ok(first))
}

/// Fits the boundary circle to a radial profile. Rays without a hit are
/// bridged by the fitted circle.
pub fn fit_circle(profile: &RadialProfile, inlier_tol: f64) -> Result<Circle> {
    let angles: Vec<f64> = profile
        .samples
        .iter()
        .filter(|s| s.hit.is_some())
        .map(|s| s.angle)
        .collect();
    if angles.len() < 3 {
        return Err(Error::BoundaryNotRecoverable(format!("{} hits, need at least 3", angles.len())));
    }
    let span = angular_span(&angles);
    if span <= FRAC_PI_2 {
        return Err(Error::BoundaryNotRecoverable(format!(
            "hits span {:.1} degrees, need more than 90",
            span.to_degrees()
        )));
    }
    fit_with_refit(&profile.points(), inlier_tol)
}
