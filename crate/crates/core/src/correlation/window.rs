use super::CorrelationVolume;
use crate::error::{Error, Result};

/// Local `(2r+1) x (2r+1)` correlation patches for every BEV cell, at full
/// and half map resolution.
///
/// Patch layout: `full[cell * side² + (oy + r) * side + (ox + r)]` holds the
/// correlation at map position `X(cell) + (ox, oy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationWindow {
    pub radius: usize,
    pub cells: usize,
    pub full: Vec<f32>,
    pub half: Vec<f32>,
}

impl CorrelationWindow {
    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn patch_len(&self) -> usize {
        self.side() * self.side()
    }

    pub fn full_patch(&self, cell: usize) -> &[f32] {
        let n = self.patch_len();
        &self.full[cell * n..(cell + 1) * n]
    }

    pub fn half_patch(&self, cell: usize) -> &[f32] {
        let n = self.patch_len();
        &self.half[cell * n..(cell + 1) * n]
    }
}

/// Converts a full-resolution map feature coordinate to half resolution.
///
/// Half cell `k` pools full cells `2k` and `2k + 1`, so its center lies at
/// full coordinate `2k + 0.5`.
pub fn full_to_half(x: f64) -> f64 {
    (x - 0.5) * 0.5
}

/// Bilinearly samples `(2r+1)²` integer offsets around `(cx, cy)` on a
/// `w x h` plane with zero padding, writing into `out`.
fn sample_patch(plane: &[f32], w: usize, h: usize, cx: f64, cy: f64, r: usize, out: &mut [f32]) {
    let side = 2 * r + 1;
    let span = (w.max(h) + 2 * side) as f64;
    if !(cx.abs() < span && cy.abs() < span) {
        out.fill(0.0);
        return;
    }
    let x0 = cx.floor();
    let y0 = cy.floor();
    let (fx, fy) = (cx - x0, cy - y0);
    let (x0, y0) = (x0 as i64 - r as i64, y0 as i64 - r as i64);
    let (w00, w10, w01, w11) = ((1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy, fx * fy);
    let inside = x0 >= 0 && y0 >= 0 && x0 + side as i64 + 1 <= w as i64 && y0 + side as i64 + 1 <= h as i64;
    if inside {
        let (x0, y0) = (x0 as usize, y0 as usize);
        for oy in 0..side {
            let top = &plane[(y0 + oy) * w + x0..(y0 + oy) * w + x0 + side + 1];
            let bot = &plane[(y0 + oy + 1) * w + x0..(y0 + oy + 1) * w + x0 + side + 1];
            let row = &mut out[oy * side..(oy + 1) * side];
            for ox in 0..side {
                let v = w00 * top[ox] as f64 + w10 * top[ox + 1] as f64 + w01 * bot[ox] as f64 + w11 * bot[ox + 1] as f64;
                row[ox] = v as f32;
            }
        }
        return;
    }
    let at = |x: i64, y: i64| -> f64 {
        if x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h {
            plane[y as usize * w + x as usize] as f64
        } else {
            0.0
        }
    };
    for oy in 0..side as i64 {
        for ox in 0..side as i64 {
            let (x, y) = (x0 + ox, y0 + oy);
            let v = w00 * at(x, y) + w10 * at(x + 1, y) + w01 * at(x, y + 1) + w11 * at(x + 1, y + 1);
            out[oy as usize * side + ox as usize] = v as f32;
        }
    }
}

/// Extracts the windows centered on the projected coordinates `coords`
/// (one `[x, y]` per BEV cell, in full map feature units).
pub fn sample_windows(vol: &CorrelationVolume, coords: &[[f64; 2]], radius: usize) -> Result<CorrelationWindow> {
    if radius < 1 {
        return Err(Error::InvalidArgument("window radius must be at least 1".into()));
    }
    if coords.len() != vol.bev_cells() {
        return Err(Error::DimensionMismatch(format!(
            "{} coordinates for {} BEV cells",
            coords.len(),
            vol.bev_cells()
        )));
    }
    if coords.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("projected coordinates are not finite".into()));
    }
    let side = 2 * radius + 1;
    let n = side * side;
    let mut win = CorrelationWindow {
        radius,
        cells: coords.len(),
        full: vec![0.0; coords.len() * n],
        half: vec![0.0; coords.len() * n],
    };
    for (cell, c) in coords.iter().enumerate() {
        sample_patch(
            vol.full_plane(cell),
            vol.map_w,
            vol.map_h,
            c[0],
            c[1],
            radius,
            &mut win.full[cell * n..(cell + 1) * n],
        );
        sample_patch(
            vol.half_plane(cell),
            vol.half_w,
            vol.half_h,
            full_to_half(c[0]),
            full_to_half(c[1]),
            radius,
            &mut win.half[cell * n..(cell + 1) * n],
        );
    }
    Ok(win)
}
