//! Partition of the angles around the pupil into stable and occlusion zones.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::wrap_angle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    /// Around the orientation direction.
    RightStable,
    /// Around the opposite direction.
    LeftStable,
    UpperOcclusion,
    LowerOcclusion,
}

impl Zone {
    pub fn is_stable(self) -> bool {
        matches!(self, Zone::RightStable | Zone::LeftStable)
    }
}

/// Four sectors aligned with the eye's major axis. Angles follow image
/// coordinates, so "upper" is toward negative y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZonePartition {
    pub orientation: f64,
    pub stable_halfwidth: f64,
}

/// Sector `[start, end]` in radians; `start` may be negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sector {
    pub zone: Zone,
    pub start: f64,
    pub end: f64,
}

pub fn partition_zones(orientation: f64, stable_halfwidth: f64) -> Result<ZonePartition> {
    if !(0.0 < stable_halfwidth && stable_halfwidth < PI / 4.0) {
        return Err(Error::param(
            "stable_halfwidth",
            format!("must lie in (0, pi/4), got {stable_halfwidth}"),
        ));
    }
    Ok(ZonePartition {
        orientation,
        stable_halfwidth,
    })
}

impl ZonePartition {
    pub fn zone_of(&self, angle: f64) -> Zone {
        // offset from the major axis, in [-pi, pi)
        let rel = wrap_angle(angle - self.orientation + PI) - PI;
        if rel.abs() <= self.stable_halfwidth {
            Zone::RightStable
        } else if PI - rel.abs() <= self.stable_halfwidth {
            Zone::LeftStable
        } else if rel < 0.0 {
            Zone::UpperOcclusion
        } else {
            Zone::LowerOcclusion
        }
    }

    /// Sector bounds, ordered right stable, lower occlusion, left stable,
    /// upper occlusion.
    pub fn sectors(&self) -> [Sector; 4] {
        let (o, hw) = (self.orientation, self.stable_halfwidth);
        [
            Sector { zone: Zone::RightStable, start: o - hw, end: o + hw },
            Sector { zone: Zone::LowerOcclusion, start: o + hw, end: o + PI - hw },
            Sector { zone: Zone::LeftStable, start: o + PI - hw, end: o + PI + hw },
            Sector { zone: Zone::UpperOcclusion, start: o + PI + hw, end: o + 2.0 * PI - hw },
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizontal_partition() {
        let z = partition_zones(0.0, PI / 6.0).unwrap();
        let s = z.sectors();
        assert!((s[0].start.to_degrees() + 30.0).abs() < 1e-9 && (s[0].end.to_degrees() - 30.0).abs() < 1e-9);
        assert!((s[2].start.to_degrees() - 150.0).abs() < 1e-9 && (s[2].end.to_degrees() - 210.0).abs() < 1e-9);
        for sector in [s[1], s[3]] {
            assert!(((sector.end - sector.start).to_degrees() - 120.0).abs() < 1e-9);
        }
        assert_eq!(z.zone_of(0.0), Zone::RightStable);
        assert_eq!(z.zone_of(PI), Zone::LeftStable);
        assert_eq!(z.zone_of(-PI / 2.0), Zone::UpperOcclusion);
        assert_eq!(z.zone_of(PI / 2.0), Zone::LowerOcclusion);
        assert_eq!(z.zone_of(29f64.to_radians()), Zone::RightStable);
        assert_eq!(z.zone_of(31f64.to_radians()), Zone::LowerOcclusion);
    }

    #[test]
    fn rotation_equivariance() {
        let base = partition_zones(0.0, 0.4).unwrap();
        let delta = 0.25;
        let rotated = partition_zones(delta, 0.4).unwrap();
        for (a, b) in base.sectors().iter().zip(rotated.sectors().iter()) {
            assert!((b.start - a.start - delta).abs() < 1e-12 && (b.end - a.end - delta).abs() < 1e-12);
        }
        for k in 0..360 {
            let a = (k as f64 + 0.5).to_radians();
            assert_eq!(base.zone_of(a), rotated.zone_of(a + delta));
        }
    }

    #[test]
    fn sectors_cover_the_turn() {
        let z = partition_zones(0.7, 0.5).unwrap();
        let total: f64 = z.sectors().iter().map(|s| s.end - s.start).sum();
        assert!((total - 2.0 * PI).abs() < 1e-12);
        assert!(partition_zones(0.0, PI / 4.0).is_err());
        assert!(partition_zones(0.0, 0.0).is_err());
    }
}
