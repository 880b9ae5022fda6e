use serde::{Deserialize, Serialize};

use super::edt::squared_distance_to;
use crate::error::{Error, Result};
use crate::osm_map::{RasterGrid, CHANNELS};

/// Input pixels per feature cell along each axis.
pub const FEATURE_STRIDE: usize = 4;

/// Deterministic per-pixel descriptor recipe.
///
/// Per semantic channel: the binary mask, its signed distance transform
/// clamped at `sdt_truncation_m` and scaled to `[-1, 1]` (negative inside),
/// and the mask blurred with a Gaussian of `blur_sigma_m`. The per-pixel
/// stack is average-pooled over 4x4 blocks and L2-normalized per cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedConfig {
    pub sdt_truncation_m: f64,
    pub blur_sigma_m: f64,
    /// Side of the square each cell averages over, in meters.
    pub pool_footprint_m: f64,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        Self {
            sdt_truncation_m: 10.0,
            blur_sigma_m: 1.0,
            pool_footprint_m: 2.0,
        }
    }
}

impl EmbedConfig {
    /// Descriptor dimension produced by this recipe.
    pub fn dim(&self) -> usize {
        3 * CHANNELS
    }
}

/// L2-normalized descriptors on the /4 feature lattice, stored cell-major:
/// `values[(row * width + col) * dim + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    pub dim: usize,
    pub height: usize,
    pub width: usize,
    pub values: Vec<f32>,
}

impl FeatureGrid {
    pub fn zeros(dim: usize, height: usize, width: usize) -> Self {
        Self {
            dim,
            height,
            width,
            values: vec![0.0; dim * height * width],
        }
    }

    pub fn cells(&self) -> usize {
        self.height * self.width
    }

    pub fn cell(&self, row: usize, col: usize) -> &[f32] {
        let start = (row * self.width + col) * self.dim;
        &self.values[start..start + self.dim]
    }

    pub fn cell_mut(&mut self, row: usize, col: usize) -> &mut [f32] {
        let start = (row * self.width + col) * self.dim;
        &mut self.values[start..start + self.dim]
    }
}

/// Clamped signed distance in `[-1, 1]`, or all zeros for an empty mask.
pub(crate) fn signed_distance(mask: &[f32], width: usize, height: usize, resolution_mpp: f64, truncation_m: f64) -> Vec<f32> {
    let inside: Vec<bool> = mask.iter().map(|v| *v > 0.5).collect();
    let Some(to_fg) = squared_distance_to(&inside, width, height) else {
        return vec![0.0; mask.len()];
    };
    let outside: Vec<bool> = inside.iter().map(|v| !v).collect();
    let to_bg = squared_distance_to(&outside, width, height);
    inside
        .iter()
        .enumerate()
        .map(|(i, &is_in)| {
            let d_px = if is_in {
                match &to_bg {
                    Some(bg) => -bg[i].sqrt(),
                    None => f64::NEG_INFINITY,
                }
            } else {
                to_fg[i].sqrt()
            };
            ((d_px * resolution_mpp).clamp(-truncation_m, truncation_m) / truncation_m) as f32
        })
        .collect()
}

fn gaussian_kernel(sigma_px: f64) -> Vec<f64> {
    let radius = (3.0 * sigma_px).ceil().max(1.0) as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma_px * sigma_px)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable Gaussian blur with zero padding.
pub(crate) fn gaussian_blur(src: &[f32], width: usize, height: usize, sigma_px: f64) -> Vec<f32> {
    if sigma_px <= 0.0 {
        return src.to_vec();
    }
    let k = gaussian_kernel(sigma_px);
    let r = (k.len() / 2) as isize;
    let mut tmp = vec![0.0f64; src.len()];
    for row in 0..height {
        for col in 0..width {
            let mut acc = 0.0;
            for (t, w) in k.iter().enumerate() {
                let c = col as isize + t as isize - r;
                if c >= 0 && (c as usize) < width {
                    acc += w * src[row * width + c as usize] as f64;
                }
            }
            tmp[row * width + col] = acc;
        }
    }
    let mut out = vec![0.0f32; src.len()];
    for row in 0..height {
        for col in 0..width {
            let mut acc = 0.0;
            for (t, w) in k.iter().enumerate() {
                let rr = row as isize + t as isize - r;
                if rr >= 0 && (rr as usize) < height {
                    acc += w * tmp[rr as usize * width + col];
                }
            }
            out[row * width + col] = acc as f32;
        }
    }
    out
}

/// Embeds a 2-channel semantic raster into an L2-normalized feature grid.
pub fn embed_features(mask: &RasterGrid, cfg: &EmbedConfig) -> Result<FeatureGrid> {
    let (w, h) = (mask.width(), mask.height());
    if mask.data.len() != CHANNELS * w * h {
        return Err(Error::BadShape(format!(
            "expected {CHANNELS} channels of {w}x{h}, got {} values",
            mask.data.len()
        )));
    }
    if w % FEATURE_STRIDE != 0 || h % FEATURE_STRIDE != 0 {
        return Err(Error::BadShape(format!(
            "raster {w}x{h} is not divisible by the feature stride {FEATURE_STRIDE}"
        )));
    }
    if !(cfg.sdt_truncation_m > 0.0) || !(cfg.blur_sigma_m >= 0.0) || !(cfg.pool_footprint_m > 0.0) {
        return Err(Error::InvalidArgument(format!("invalid embedding config {cfg:?}")));
    }
    let res = mask.spec.resolution_mpp;
    let mut planes: Vec<Vec<f32>> = Vec::with_capacity(cfg.dim());
    for c in 0..CHANNELS {
        planes.push(mask.channel(c).to_vec());
    }
    for c in 0..CHANNELS {
        let sdt = signed_distance(mask.channel(c), w, h, res, cfg.sdt_truncation_m);
        planes.push(sdt.iter().map(|v| if *v == 0.0 && mask.count_nonzero(c) == 0 { 0.0 } else { 0.5 * (1.0 - v) }).collect());
    }
    for c in 0..CHANNELS {
        planes.push(gaussian_blur(mask.channel(c), w, h, cfg.blur_sigma_m / res));
    }

    let (fh, fw) = (h / FEATURE_STRIDE, w / FEATURE_STRIDE);
    let dim = planes.len();
    let mut grid = FeatureGrid::zeros(dim, fh, fw);
    let side = ((cfg.pool_footprint_m / res).round() as usize).max(1);
    // Footprints share the cell center (exactly for even sides). At the
    // raster edge the footprint shrinks on both sides to keep that center.
    let start = |j: usize| (FEATURE_STRIDE * j) as i64 + (FEATURE_STRIDE as i64 - side as i64) / 2;
    let span = |j: usize, n: usize| {
        let (a, b) = (start(j), start(j) + side as i64);
        let cut = (-a).max(b - n as i64).max(0);
        ((a + cut) as usize, (b - cut) as usize)
    };
    for row in 0..fh {
        let (r0, r1) = span(row, h);
        for col in 0..fw {
            let (c0, c1) = span(col, w);
            let count = ((r1 - r0) * (c1 - c0)) as f64;
            let cell = grid.cell_mut(row, col);
            let mut sq = 0.0f64;
            for (k, plane) in planes.iter().enumerate() {
                let mut acc = 0.0f64;
                for r in r0..r1 {
                    acc += plane[r * w + c0..r * w + c1].iter().map(|v| *v as f64).sum::<f64>();
                }
                let mean = acc / count;
                cell[k] = mean as f32;
                sq += mean * mean;
            }
            if sq > 0.0 {
                let inv = 1.0 / sq.sqrt();
                cell.iter_mut().for_each(|v| *v = (*v as f64 * inv) as f32);
            }
        }
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::osm_map::{GridSpec, ROAD};
    use crate::pose::Pose3DoF;

    #[test]
    fn empty_mask_gives_zero_features() {
        let spec = GridSpec::new(32, 16, 0.5, Pose3DoF::default()).unwrap();
        let f = embed_features(&RasterGrid::zeros(spec), &EmbedConfig::default()).unwrap();
        assert_eq!((f.height, f.width, f.dim), (4, 8, 6));
        assert!(f.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn shape_checks() {
        let spec = GridSpec::new(30, 16, 0.5, Pose3DoF::default()).unwrap();
        assert!(matches!(
            embed_features(&RasterGrid::zeros(spec), &EmbedConfig::default()),
            Err(Error::BadShape(_))
        ));
    }

    #[test]
    fn cells_are_unit_or_zero() {
        let spec = GridSpec::new(64, 64, 0.5, Pose3DoF::default()).unwrap();
        let mut g = RasterGrid::zeros(spec);
        for r in 20..30 {
            for c in 0..64 {
                g.set(ROAD, r, c, 1.0);
            }
        }
        let f = embed_features(&g, &EmbedConfig::default()).unwrap();
        for i in 0..f.cells() {
            let n: f64 = f.values[i * f.dim..(i + 1) * f.dim].iter().map(|v| (*v as f64).powi(2)).sum();
            assert!((n - 1.0).abs() < 1e-6 || n == 0.0);
        }
        assert_eq!(f, embed_features(&g, &EmbedConfig::default()).unwrap());
    }

    #[test]
    fn blur_preserves_mass_away_from_border() {
        let (w, h) = (41, 41);
        let mut src = vec![0.0f32; w * h];
        src[20 * w + 20] = 1.0;
        let out = gaussian_blur(&src, w, h, 2.0);
        let total: f32 = out.iter().sum();
        assert!((total - 1.0).abs() < 1e-5);
        assert!(out[20 * w + 20] > out[20 * w + 22]);
    }

    #[test]
    fn disk_signed_distance_matches_scan() {
        let (w, h, res) = (96usize, 96usize, 0.5);
        let mut mask = vec![0.0f32; w * h];
        for r in 0..h {
            for c in 0..w {
                if (r as f64 - 40.0).hypot(c as f64 - 44.0) <= 25.0 {
                    mask[r * w + c] = 1.0;
                }
            }
        }
        let sdt = signed_distance(&mask, w, h, res, 10.0);
        for r in 0..h {
            for c in 0..w {
                let inside = mask[r * w + c] > 0.5;
                let mut best = f64::INFINITY;
                for rr in 0..h {
                    for cc in 0..w {
                        if (mask[rr * w + cc] > 0.5) != inside {
                            best = best.min((r as f64 - rr as f64).hypot(c as f64 - cc as f64));
                        }
                    }
                }
                let d = if inside { -best } else { best };
                let want = ((d * res).clamp(-10.0, 10.0) / 10.0) as f32;
                assert_eq!(sdt[r * w + c], want, "pixel ({r}, {c})");
            }
        }
        assert_eq!(sdt[40 * w + 44], -1.0);
        assert_eq!(sdt[95 * w + 95], 1.0);
    }
}
