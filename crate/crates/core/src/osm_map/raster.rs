use log::warn;

use super::{shoelace, GridSpec, RasterGrid, VectorMap, BUILDING, CHANNELS, ROAD};
use crate::error::Result;
use crate::pose::Pose3DoF;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RasterStats {
    /// Buildings whose projected area was below one pixel.
    pub degenerate_polygons: usize,
}

/// Rasterizes roads and buildings with binary pixel-center coverage.
pub fn rasterize(vm: &VectorMap, spec: GridSpec) -> RasterGrid {
    rasterize_with_stats(vm, spec).0
}

pub fn rasterize_with_stats(vm: &VectorMap, spec: GridSpec) -> (RasterGrid, RasterStats) {
    let mut grid = RasterGrid::zeros(spec);
    let mut stats = RasterStats::default();
    let to_px = spec.world_to_pixel_matrix();
    let project = |p: &[f64; 2]| -> [f64; 2] {
        [
            to_px[0][0] * p[0] + to_px[0][1] * p[1] + to_px[0][2],
            to_px[1][0] * p[0] + to_px[1][1] * p[1] + to_px[1][2],
        ]
    };

    let mut ring_px = Vec::new();
    for b in &vm.buildings {
        ring_px.clear();
        ring_px.extend(b.ring.iter().map(project));
        if shoelace(&ring_px).abs() < 1.0 {
            stats.degenerate_polygons += 1;
            continue;
        }
        fill_polygon(&mut grid, BUILDING, &ring_px);
    }

    let mut line_px = Vec::new();
    for r in &vm.roads {
        line_px.clear();
        line_px.extend(r.points.iter().map(project));
        let half_width_px = 0.5 * r.width_m() / spec.resolution_mpp;
        for seg in line_px.windows(2) {
            stroke_segment(&mut grid, ROAD, seg[0], seg[1], half_width_px);
        }
    }

    if stats.degenerate_polygons > 0 {
        warn!(
            "{} building polygon(s) smaller than one pixel were skipped",
            stats.degenerate_polygons
        );
    }
    (grid, stats)
}

/// Builds a square grid of `size_m` at `resolution_mpp` centered and oriented
/// at `center`, then rasterizes.
pub fn crop_patch(vm: &VectorMap, center: Pose3DoF, size_m: f64, resolution_mpp: f64) -> Result<RasterGrid> {
    let spec = GridSpec::square(size_m, resolution_mpp, center)?;
    Ok(rasterize(vm, spec))
}

/// Resamples `src` onto `spec` by nearest pixel center; pixels falling
/// outside `src` stay zero.
pub fn resample_nearest(src: &RasterGrid, spec: GridSpec) -> RasterGrid {
    let mut out = RasterGrid::zeros(spec);
    let (sw, sh) = (src.width() as f64, src.height() as f64);
    for row in 0..out.height() {
        for col in 0..out.width() {
            let q = src.spec.world_to_pixel(spec.pixel_to_world([col as f64, row as f64]));
            let (x, y) = ((q[0] + 0.5).floor(), (q[1] + 0.5).floor());
            if x < 0.0 || y < 0.0 || x >= sw || y >= sh {
                continue;
            }
            for c in 0..CHANNELS {
                let v = src.get(c, y as usize, x as usize);
                out.set(c, row, col, v);
            }
        }
    }
    out
}

/// Even-odd scanline fill. Pixel `(col, row)` is covered when its center lies
/// inside the ring, with the half-open rule `x_left <= col < x_right` on each
/// span so shared edges are never filled twice.
fn fill_polygon(grid: &mut RasterGrid, channel: usize, ring: &[[f64; 2]]) {
    let (w, h) = (grid.width() as i64, grid.height() as i64);
    let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in ring {
        min_y = min_y.min(p[1]);
        max_y = max_y.max(p[1]);
    }
    let row_lo = (min_y.floor() as i64).max(0);
    let row_hi = (max_y.ceil() as i64).min(h - 1);
    let mut xs: Vec<f64> = Vec::new();
    for row in row_lo..=row_hi {
        let y = row as f64;
        xs.clear();
        for e in ring.windows(2) {
            let (a, b) = (e[0], e[1]);
            if (a[1] > y) != (b[1] > y) {
                xs.push(a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1]));
            }
        }
        xs.sort_by(f64::total_cmp);
        for span in xs.chunks_exact(2) {
            let c0 = (span[0].ceil() as i64).max(0);
            let c1 = (span[1].ceil() as i64).min(w);
            for col in c0..c1 {
                grid.set(channel, row as usize, col as usize, 1.0);
            }
        }
    }
}

/// Squared distance from `p` to segment `ab`, all in pixels.
pub(crate) fn segment_distance_sq(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len_sq = dx * dx + dy * dy;
    let t = if len_sq > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len_sq).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (qx, qy) = (a[0] + t * dx - p[0], a[1] + t * dy - p[1]);
    qx * qx + qy * qy
}

fn stroke_segment(grid: &mut RasterGrid, channel: usize, a: [f64; 2], b: [f64; 2], half_width_px: f64) {
    let (w, h) = (grid.width() as i64, grid.height() as i64);
    let col_lo = ((a[0].min(b[0]) - half_width_px).floor() as i64).max(0);
    let col_hi = ((a[0].max(b[0]) + half_width_px).ceil() as i64).min(w - 1);
    let row_lo = ((a[1].min(b[1]) - half_width_px).floor() as i64).max(0);
    let row_hi = ((a[1].max(b[1]) + half_width_px).ceil() as i64).min(h - 1);
    let limit = half_width_px * half_width_px;
    for row in row_lo..=row_hi {
        for col in col_lo..=col_hi {
            if segment_distance_sq([col as f64, row as f64], a, b) <= limit {
                grid.set(channel, row as usize, col as usize, 1.0);
            }
        }
    }
}
