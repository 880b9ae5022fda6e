use std::cell::Cell;

use super::FeatureGrid;
use crate::error::{Error, Result};
use crate::par::{for_each_chunk_mut, Execution};

thread_local! {
    static BUILDS: Cell<u64> = const { Cell::new(0) };
}

/// Number of volumes built by the current thread so far.
pub fn volume_builds_on_this_thread() -> u64 {
    BUILDS.with(Cell::get)
}

/// All-pairs correlation between BEV and map feature cells plus its 2x2
/// average-pooled variant over the map axes.
///
/// `full[((i * bev_w + j) * map_h + k) * map_w + l] = max(0, <bev(i,j), map(k,l)>)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationVolume {
    pub bev_h: usize,
    pub bev_w: usize,
    pub map_h: usize,
    pub map_w: usize,
    pub half_h: usize,
    pub half_w: usize,
    pub full: Vec<f32>,
    pub half: Vec<f32>,
}

impl CorrelationVolume {
    pub fn bev_cells(&self) -> usize {
        self.bev_h * self.bev_w
    }

    /// The `map_h x map_w` correlation plane of BEV cell `cell`.
    pub fn full_plane(&self, cell: usize) -> &[f32] {
        let n = self.map_h * self.map_w;
        &self.full[cell * n..(cell + 1) * n]
    }

    pub fn half_plane(&self, cell: usize) -> &[f32] {
        let n = self.half_h * self.half_w;
        &self.half[cell * n..(cell + 1) * n]
    }

    pub fn full_at(&self, i: usize, j: usize, k: usize, l: usize) -> f32 {
        self.full[((i * self.bev_w + j) * self.map_h + k) * self.map_w + l]
    }

    pub fn half_at(&self, i: usize, j: usize, k: usize, l: usize) -> f32 {
        self.half[((i * self.bev_w + j) * self.half_h + k) * self.half_w + l]
    }
}

pub fn build_volume(f_bev: &FeatureGrid, f_map: &FeatureGrid) -> Result<CorrelationVolume> {
    build_volume_with(f_bev, f_map, Execution::default())
}

/// Builds the volume, splitting work over BEV cells according to `exec`.
pub fn build_volume_with(f_bev: &FeatureGrid, f_map: &FeatureGrid, exec: Execution) -> Result<CorrelationVolume> {
    if f_bev.dim != f_map.dim {
        return Err(Error::DimensionMismatch(format!(
            "descriptor dimensions differ: {} vs {}",
            f_bev.dim, f_map.dim
        )));
    }
    if (f_bev.height, f_bev.width) != (f_map.height, f_map.width) {
        return Err(Error::DimensionMismatch(format!(
            "feature grids differ: {}x{} vs {}x{}",
            f_bev.height, f_bev.width, f_map.height, f_map.width
        )));
    }
    if f_map.height % 2 != 0 || f_map.width % 2 != 0 {
        return Err(Error::DimensionMismatch(format!(
            "map feature grid {}x{} cannot be 2x2 pooled",
            f_map.height, f_map.width
        )));
    }
    BUILDS.with(|b| b.set(b.get() + 1));

    let dim = f_bev.dim;
    let (map_h, map_w) = (f_map.height, f_map.width);
    let (half_h, half_w) = (map_h / 2, map_w / 2);
    let plane = map_h * map_w;
    let half_plane = half_h * half_w;
    let cells = f_bev.cells();

    let mut full = vec![0.0f32; cells * plane];
    for_each_chunk_mut(&mut full, plane, exec, |cell, out| {
        let a = &f_bev.values[cell * dim..(cell + 1) * dim];
        if a.iter().all(|v| *v == 0.0) {
            return;
        }
        for (m, o) in out.iter_mut().enumerate() {
            let b = &f_map.values[m * dim..(m + 1) * dim];
            let mut acc = 0.0f64;
            for t in 0..dim {
                acc += a[t] as f64 * b[t] as f64;
            }
            *o = acc.max(0.0) as f32;
        }
    });

    let mut half = vec![0.0f32; cells * half_plane];
    for_each_chunk_mut(&mut half, half_plane, exec, |cell, out| {
        let src = &full[cell * plane..(cell + 1) * plane];
        for k in 0..half_h {
            for l in 0..half_w {
                let (r0, r1) = (2 * k * map_w, (2 * k + 1) * map_w);
                let sum = src[r0 + 2 * l] as f64
                    + src[r0 + 2 * l + 1] as f64
                    + src[r1 + 2 * l] as f64
                    + src[r1 + 2 * l + 1] as f64;
                out[k * half_w + l] = (sum / 4.0) as f32;
            }
        }
    });

    Ok(CorrelationVolume {
        bev_h: f_bev.height,
        bev_w: f_bev.width,
        map_h,
        map_w,
        half_h,
        half_w,
        full,
        half,
    })
}
