use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pose::Pose3DoF;

/// Number of semantic channels in every raster.
pub const CHANNELS: usize = 2;
pub const ROAD: usize = 0;
pub const BUILDING: usize = 1;

/// Geo-referenced pixel lattice.
///
/// Pixel `(u, v)` is column `u`, row `v`; integer coordinates are pixel
/// centers and row 0 is the top. The grid center sits at
/// `((width - 1) / 2, (height - 1) / 2)` and is placed at `center` in the map
/// frame. With heading 0, `+u` points east and `-v` points north; a heading
/// rotates the whole lattice counter-clockwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpecRecord", into = "GridSpecRecord")]
pub struct GridSpec {
    pub width_px: usize,
    pub height_px: usize,
    pub resolution_mpp: f64,
    pub center: Pose3DoF,
}

#[derive(Serialize, Deserialize)]
struct GridSpecRecord {
    width_px: usize,
    height_px: usize,
    resolution_mpp: f64,
    center_x: f64,
    center_y: f64,
    center_theta_rad: f64,
}

impl TryFrom<GridSpecRecord> for GridSpec {
    type Error = Error;

    fn try_from(r: GridSpecRecord) -> Result<Self> {
        GridSpec::new(
            r.width_px,
            r.height_px,
            r.resolution_mpp,
            Pose3DoF::new(r.center_x, r.center_y, r.center_theta_rad),
        )
    }
}

impl From<GridSpec> for GridSpecRecord {
    fn from(s: GridSpec) -> Self {
        GridSpecRecord {
            width_px: s.width_px,
            height_px: s.height_px,
            resolution_mpp: s.resolution_mpp,
            center_x: s.center.x_m,
            center_y: s.center.y_m,
            center_theta_rad: s.center.theta_rad,
        }
    }
}

impl GridSpec {
    pub fn new(width_px: usize, height_px: usize, resolution_mpp: f64, center: Pose3DoF) -> Result<Self> {
        if width_px == 0 || height_px == 0 {
            return Err(Error::InvalidArgument(format!(
                "grid dimensions must be positive, got {width_px}x{height_px}"
            )));
        }
        if !(resolution_mpp.is_finite() && resolution_mpp > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "resolution must be positive, got {resolution_mpp}"
            )));
        }
        if !center.is_finite() {
            return Err(Error::InvalidArgument("grid center is not finite".into()));
        }
        Ok(Self {
            width_px,
            height_px,
            resolution_mpp,
            center,
        })
    }

    /// Square grid of `round(size_m / resolution_mpp)` pixels per side.
    pub fn square(size_m: f64, resolution_mpp: f64, center: Pose3DoF) -> Result<Self> {
        if !(size_m.is_finite() && size_m > 0.0) {
            return Err(Error::InvalidArgument(format!("patch size must be positive, got {size_m}")));
        }
        if !(resolution_mpp.is_finite() && resolution_mpp > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "resolution must be positive, got {resolution_mpp}"
            )));
        }
        let n = (size_m / resolution_mpp).round() as usize;
        Self::new(n, n, resolution_mpp, center)
    }

    pub fn with_center(self, center: Pose3DoF) -> Self {
        Self { center, ..self }
    }

    pub fn extent_m(&self) -> (f64, f64) {
        (
            self.width_px as f64 * self.resolution_mpp,
            self.height_px as f64 * self.resolution_mpp,
        )
    }

    pub fn center_px(&self) -> [f64; 2] {
        [
            (self.width_px as f64 - 1.0) * 0.5,
            (self.height_px as f64 - 1.0) * 0.5,
        ]
    }

    pub fn same_shape(&self, other: &GridSpec) -> bool {
        self.width_px == other.width_px
            && self.height_px == other.height_px
            && self.resolution_mpp == other.resolution_mpp
    }

    /// Pixel to grid-local metric offset (right, up) from the grid center.
    pub fn pixel_to_local(&self, p: [f64; 2]) -> [f64; 2] {
        let [cu, cv] = self.center_px();
        [
            (p[0] - cu) * self.resolution_mpp,
            -(p[1] - cv) * self.resolution_mpp,
        ]
    }

    pub fn local_to_pixel(&self, l: [f64; 2]) -> [f64; 2] {
        let [cu, cv] = self.center_px();
        [l[0] / self.resolution_mpp + cu, -l[1] / self.resolution_mpp + cv]
    }

    pub fn pixel_to_world(&self, p: [f64; 2]) -> [f64; 2] {
        self.center.transform_point(self.pixel_to_local(p))
    }

    pub fn world_to_pixel(&self, w: [f64; 2]) -> [f64; 2] {
        self.local_to_pixel(self.center.inverse_transform_point(w))
    }

    /// Affine matrix taking homogeneous pixel coordinates to map-frame meters.
    pub fn pixel_to_world_matrix(&self) -> [[f64; 3]; 3] {
        let r = self.resolution_mpp;
        let [cu, cv] = self.center_px();
        let (s, c) = self.center.theta_rad.sin_cos();
        // world = R * diag(r, -r) * (p - c_px) + t
        [
            [c * r, s * r, -c * r * cu - s * r * cv + self.center.x_m],
            [s * r, -c * r, -s * r * cu + c * r * cv + self.center.y_m],
            [0.0, 0.0, 1.0],
        ]
    }

    /// Inverse of [`GridSpec::pixel_to_world_matrix`].
    pub fn world_to_pixel_matrix(&self) -> [[f64; 3]; 3] {
        let r = self.resolution_mpp;
        let [cu, cv] = self.center_px();
        let (s, c) = self.center.theta_rad.sin_cos();
        let (x, y) = (self.center.x_m, self.center.y_m);
        // local = R^T (w - t); u = local.x / r + cu; v = -local.y / r + cv
        [
            [c / r, s / r, -(c * x + s * y) / r + cu],
            [s / r, -c / r, (-s * x + c * y) / r + cv],
            [0.0, 0.0, 1.0],
        ]
    }
}

/// Two-plane semantic raster (road, building); values are 0.0 or 1.0.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterGrid {
    pub spec: GridSpec,
    /// `CHANNELS * height * width` values, channel-major then row-major.
    pub data: Vec<f32>,
}

impl RasterGrid {
    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            spec,
            data: vec![0.0; CHANNELS * spec.width_px * spec.height_px],
        }
    }

    pub fn from_data(spec: GridSpec, data: Vec<f32>) -> Result<Self> {
        let expected = CHANNELS * spec.width_px * spec.height_px;
        if data.len() != expected {
            return Err(Error::BadShape(format!(
                "raster data has {} values, expected {expected}",
                data.len()
            )));
        }
        Ok(Self { spec, data })
    }

    pub fn width(&self) -> usize {
        self.spec.width_px
    }

    pub fn height(&self) -> usize {
        self.spec.height_px
    }

    pub fn plane_len(&self) -> usize {
        self.spec.width_px * self.spec.height_px
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f32] {
        let n = self.plane_len();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn get(&self, c: usize, row: usize, col: usize) -> f32 {
        self.data[c * self.plane_len() + row * self.spec.width_px + col]
    }

    pub fn set(&mut self, c: usize, row: usize, col: usize, value: f32) {
        let n = self.plane_len();
        self.data[c * n + row * self.spec.width_px + col] = value;
    }

    pub fn count_nonzero(&self, c: usize) -> usize {
        self.channel(c).iter().filter(|v| **v != 0.0).count()
    }
}
