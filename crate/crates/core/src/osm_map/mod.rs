//! OpenStreetMap ingestion and 2-channel semantic rasterization.
//!
//! Only two classes survive ingestion: road centerlines (`highway=*`) and
//! building footprints (`building=*`). Everything is expressed in the local
//! ENU frame of the region.

mod grid;
pub mod hgrd;
mod parse;
mod raster;

use serde::{Deserialize, Serialize};

pub use grid::{GridSpec, RasterGrid, BUILDING, CHANNELS, ROAD};
pub use parse::parse_osm_xml;
pub use raster::{crop_patch, rasterize, rasterize_with_stats, resample_nearest, RasterStats};

use crate::geodesy::EnuFrame;
use crate::pose::Pose3DoF;

/// Width of one traffic lane, meters.
pub const LANE_WIDTH_M: f64 = 3.5;
/// Lane count assumed for roads without a usable `lanes` tag.
pub const DEFAULT_LANES: u32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Road {
    /// Centerline in (east, north) meters, at least two distinct vertices.
    pub points: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lanes: Option<u32>,
}

impl Road {
    /// Drops repeated consecutive vertices; `None` if fewer than two remain.
    pub fn new(mut points: Vec<[f64; 2]>, lanes: Option<u32>) -> Option<Self> {
        points.dedup();
        (points.len() >= 2).then_some(Self { points, lanes })
    }

    pub fn width_m(&self) -> f64 {
        f64::from(self.lanes.unwrap_or(DEFAULT_LANES).max(1)) * LANE_WIDTH_M
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Building {
    /// Closed outer ring (first vertex repeated at the end).
    pub ring: Vec<[f64; 2]>,
}

impl Building {
    /// Closes the ring if needed; `None` if it has fewer than three distinct vertices.
    pub fn new(mut ring: Vec<[f64; 2]>) -> Option<Self> {
        ring.dedup();
        if ring.len() >= 2 && ring.first() == ring.last() {
            ring.pop();
        }
        let mut distinct: Vec<[f64; 2]> = Vec::with_capacity(ring.len());
        for p in &ring {
            if !distinct.contains(p) {
                distinct.push(*p);
            }
        }
        if distinct.len() < 3 {
            return None;
        }
        let first = ring[0];
        ring.push(first);
        Some(Self { ring })
    }

    /// Unsigned shoelace area, square meters.
    pub fn area_m2(&self) -> f64 {
        shoelace(&self.ring).abs()
    }
}

pub(crate) fn shoelace(ring: &[[f64; 2]]) -> f64 {
    ring.windows(2)
        .map(|w| w[0][0] * w[1][1] - w[1][0] * w[0][1])
        .sum::<f64>()
        * 0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorMap {
    pub frame: EnuFrame,
    pub roads: Vec<Road>,
    pub buildings: Vec<Building>,
}

impl VectorMap {
    pub fn empty(frame: EnuFrame) -> Self {
        Self {
            frame,
            roads: Vec::new(),
            buildings: Vec::new(),
        }
    }

    /// Axis-aligned bounds `[min_e, min_n, max_e, max_n]` over all vertices.
    pub fn bounds(&self) -> Option<[f64; 4]> {
        let mut pts = self
            .roads
            .iter()
            .flat_map(|r| r.points.iter())
            .chain(self.buildings.iter().flat_map(|b| b.ring.iter()))
            .peekable();
        pts.peek()?;
        Some(pts.fold(
            [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY],
            |b, p| [b[0].min(p[0]), b[1].min(p[1]), b[2].max(p[0]), b[3].max(p[1])],
        ))
    }

    /// Applies a rigid transform to every vertex.
    pub fn transformed(&self, pose: &Pose3DoF) -> VectorMap {
        VectorMap {
            frame: self.frame,
            roads: self
                .roads
                .iter()
                .map(|r| Road {
                    points: r.points.iter().map(|p| pose.transform_point(*p)).collect(),
                    lanes: r.lanes,
                })
                .collect(),
            buildings: self
                .buildings
                .iter()
                .map(|b| Building {
                    ring: b.ring.iter().map(|p| pose.transform_point(*p)).collect(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn building_ring_is_closed_and_validated() {
        let b = Building::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]).unwrap();
        assert_eq!(b.ring.first(), b.ring.last());
        assert_eq!(b.ring.len(), 4);
        assert!((b.area_m2() - 0.5).abs() < 1e-12);
        assert!(Building::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 0.0]]).is_none());
    }

    #[test]
    fn road_needs_two_vertices() {
        assert!(Road::new(vec![[1.0, 1.0], [1.0, 1.0]], None).is_none());
        let r = Road::new(vec![[0.0, 0.0], [0.0, 0.0], [5.0, 0.0]], Some(0)).unwrap();
        assert_eq!(r.points.len(), 2);
        assert_eq!(r.width_m(), LANE_WIDTH_M);
    }
}
