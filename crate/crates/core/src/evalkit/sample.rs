use rand::Rng;
use serde::{Deserialize, Serialize};

use super::noise::{perturb_pose, NoiseModel};
use crate::error::{Error, Result};
use crate::osm_map::{crop_patch, GridSpec, RasterGrid, VectorMap, CHANNELS};
use crate::pose::{wrap_angle, Pose3DoF};

/// Side length and resolution of a square crop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchSpec {
    pub size_m: f64,
    pub resolution_mpp: f64,
}

impl PatchSpec {
    pub const BEV: PatchSpec = PatchSpec {
        size_m: 64.0,
        resolution_mpp: 0.25,
    };
    pub const MAP: PatchSpec = PatchSpec {
        size_m: 128.0,
        resolution_mpp: 0.5,
    };

    pub fn grid(&self, center: Pose3DoF) -> Result<GridSpec> {
        GridSpec::square(self.size_m, self.resolution_mpp, center)
    }
}

/// Wedge of the BEV blanked out, measured counter-clockwise from the
/// forward axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OcclusionSector {
    pub center_deg: f64,
    pub width_deg: f64,
}

impl OcclusionSector {
    fn contains(&self, local: [f64; 2]) -> bool {
        if local == [0.0, 0.0] {
            return false;
        }
        let bearing = (-local[0]).atan2(local[1]);
        wrap_angle(bearing - self.center_deg.to_radians()).abs() <= 0.5 * self.width_deg.to_radians()
    }
}

/// Corruptions applied to the ground-truth BEV mask.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct DegradationSpec {
    pub dropout_patch_count: usize,
    pub dropout_patch_size_px: usize,
    pub mask_flip_rate: f64,
    pub dilation_px: usize,
    pub occlusion_sector: Option<OcclusionSector>,
}

impl DegradationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.mask_flip_rate) {
            return Err(Error::InvalidArgument(format!(
                "mask_flip_rate {} outside [0, 1]",
                self.mask_flip_rate
            )));
        }
        if let Some(s) = self.occlusion_sector {
            if !(s.width_deg >= 0.0 && s.width_deg <= 360.0 && s.center_deg.is_finite()) {
                return Err(Error::InvalidArgument(format!("bad occlusion sector {s:?}")));
            }
        }
        Ok(())
    }

    pub fn is_clean(&self) -> bool {
        *self == DegradationSpec::default()
    }

    /// Applies dilation, flips, dropout and occlusion in that order.
    pub fn apply(&self, grid: &mut RasterGrid, rng: &mut impl Rng) {
        if self.dilation_px > 0 {
            for c in 0..CHANNELS {
                dilate(grid, c, self.dilation_px);
            }
        }
        if self.mask_flip_rate > 0.0 {
            for v in grid.data.iter_mut() {
                if rng.random::<f64>() < self.mask_flip_rate {
                    *v = 1.0 - *v;
                }
            }
        }
        let (w, h) = (grid.width(), grid.height());
        let size = self.dropout_patch_size_px.min(w).min(h);
        if size > 0 {
            for _ in 0..self.dropout_patch_count {
                let c0 = rng.random_range(0..=w - size);
                let r0 = rng.random_range(0..=h - size);
                for c in 0..CHANNELS {
                    for r in r0..r0 + size {
                        for col in c0..c0 + size {
                            grid.set(c, r, col, 0.0);
                        }
                    }
                }
            }
        }
        if let Some(sector) = self.occlusion_sector {
            let spec = grid.spec;
            for r in 0..h {
                for col in 0..w {
                    if sector.contains(spec.pixel_to_local([col as f64, r as f64])) {
                        for c in 0..CHANNELS {
                            grid.set(c, r, col, 0.0);
                        }
                    }
                }
            }
        }
    }
}

/// Square-element binary dilation of one channel.
fn dilate(grid: &mut RasterGrid, channel: usize, radius: usize) {
    let (w, h) = (grid.width(), grid.height());
    let src = grid.channel(channel).to_vec();
    let mut rows = vec![0.0f32; w * h];
    for r in 0..h {
        for c in 0..w {
            let lo = c.saturating_sub(radius);
            let hi = (c + radius).min(w - 1);
            if src[r * w + lo..=r * w + hi].iter().any(|v| *v > 0.5) {
                rows[r * w + c] = 1.0;
            }
        }
    }
    let dst = grid.channel_mut(channel);
    for r in 0..h {
        let lo = r.saturating_sub(radius);
        let hi = (r + radius).min(h - 1);
        for c in 0..w {
            dst[r * w + c] = if (lo..=hi).any(|k| rows[k * w + c] > 0.5) { 1.0 } else { 0.0 };
        }
    }
}

/// One synthetic localization problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Ego-centric BEV mask; its spec center is the origin.
    pub bev: RasterGrid,
    /// Map crop centered and oriented at the prior.
    pub map_patch: RasterGrid,
    pub prior: Pose3DoF,
    pub gt: Pose3DoF,
}

/// Checks that `p` lies inside the map's bounds shrunk by `margin_m`.
pub fn check_coverage(vm: &VectorMap, p: &Pose3DoF, margin_m: f64) -> Result<()> {
    let out = || Error::OutOfCoverage {
        x: p.x_m,
        y: p.y_m,
        margin_m,
    };
    let b = vm.bounds().ok_or_else(out)?;
    if p.x_m < b[0] + margin_m || p.x_m > b[2] - margin_m || p.y_m < b[1] + margin_m || p.y_m > b[3] - margin_m {
        return Err(out());
    }
    Ok(())
}

pub const COVERAGE_MARGIN_M: f64 = 96.0;

/// Builds a sample with the default crop sizes.
pub fn make_sample(
    vm: &VectorMap,
    true_pose: &Pose3DoF,
    nm: &NoiseModel,
    deg: &DegradationSpec,
    rng: &mut impl Rng,
) -> Result<Sample> {
    make_sample_with(vm, true_pose, nm, deg, PatchSpec::BEV, PatchSpec::MAP, rng)
}

pub fn make_sample_with(
    vm: &VectorMap,
    true_pose: &Pose3DoF,
    nm: &NoiseModel,
    deg: &DegradationSpec,
    bev_spec: PatchSpec,
    map_spec: PatchSpec,
    rng: &mut impl Rng,
) -> Result<Sample> {
    nm.validate()?;
    deg.validate()?;
    check_coverage(vm, true_pose, COVERAGE_MARGIN_M)?;
    let prior = perturb_pose(true_pose, nm, rng);
    let mut bev = crop_patch(vm, *true_pose, bev_spec.size_m, bev_spec.resolution_mpp)?;
    bev.spec = bev.spec.with_center(Pose3DoF::default());
    deg.apply(&mut bev, rng);
    let map_patch = crop_patch(vm, prior, map_spec.size_m, map_spec.resolution_mpp)?;
    Ok(Sample {
        bev,
        map_patch,
        prior,
        gt: *true_pose,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::osm_map::ROAD;

    #[test]
    fn occlusion_wedge_is_blank() {
        let spec = GridSpec::square(16.0, 0.5, Pose3DoF::default()).unwrap();
        let mut g = RasterGrid::from_data(spec, vec![1.0; CHANNELS * 32 * 32]).unwrap();
        let sector = OcclusionSector {
            center_deg: 0.0,
            width_deg: 90.0,
        };
        let deg = DegradationSpec {
            occlusion_sector: Some(sector),
            ..Default::default()
        };
        deg.apply(&mut g, &mut rand::rng());
        let mut blanked = 0;
        for r in 0..32 {
            for c in 0..32 {
                let inside = sector.contains(spec.pixel_to_local([c as f64, r as f64]));
                assert_eq!(g.get(ROAD, r, c) == 0.0, inside);
                blanked += inside as usize;
            }
        }
        // Forward is up: the top-center pixel is occluded, the bottom-center one is not.
        assert_eq!(g.get(ROAD, 0, 16), 0.0);
        assert_eq!(g.get(ROAD, 31, 16), 1.0);
        assert!(blanked > 200 && blanked < 300);
    }

    #[test]
    fn dilation_grows_a_point() {
        let spec = GridSpec::square(8.0, 1.0, Pose3DoF::default()).unwrap();
        let mut g = RasterGrid::zeros(spec);
        g.set(ROAD, 4, 4, 1.0);
        dilate(&mut g, ROAD, 1);
        assert_eq!(g.count_nonzero(ROAD), 9);
        assert_eq!(g.get(ROAD, 3, 5), 1.0);
    }

    #[test]
    fn flip_rate_bounds_checked() {
        let deg = DegradationSpec {
            mask_flip_rate: 1.5,
            ..Default::default()
        };
        assert!(deg.validate().is_err());
    }
}
