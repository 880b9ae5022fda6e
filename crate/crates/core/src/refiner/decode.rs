use serde::{Deserialize, Serialize};

use crate::correlation::CorrelationWindow;
use crate::error::{Error, Result};
use crate::homography::CornerDisplacement;

use super::RefinerConfig;

/// Planar transform family fitted to the correlation evidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// Rotation + translation; scale pinned to the known resolution ratio.
    #[default]
    RigidFixedScale,
    /// Rotation + translation + free uniform scale.
    Similarity,
}

/// Temperature-weighted expected offset over a `(2r+1)²` patch, in patch
/// units, with `(0, 0)` at the patch center.
pub fn soft_argmax(patch: &[f32], radius: usize, temperature: f64) -> [f64; 2] {
    let side = 2 * radius + 1;
    let peak = patch.iter().fold(f32::NEG_INFINITY, |a, v| a.max(*v)) as f64;
    let (mut sum, mut ex, mut ey) = (0.0, 0.0, 0.0);
    for (k, v) in patch.iter().enumerate() {
        let p = ((*v as f64 - peak) / temperature).exp();
        sum += p;
        ex += p * ((k % side) as f64 - radius as f64);
        ey += p * ((k / side) as f64 - radius as f64);
    }
    [ex / sum, ey / sum]
}

/// Geometry shared by every decode call of one localization.
#[derive(Debug, Clone, Copy)]
pub struct DecodeGeometry {
    pub bev_w: usize,
    pub bev_h: usize,
    /// BEV feature cell size over map feature cell size.
    pub scale: f64,
}

impl DecodeGeometry {
    /// Feature-cell centers of the four BEV corners: TL, TR, BR, BL.
    pub fn corner_cells(&self) -> [[f64; 2]; 4] {
        let (w, h) = ((self.bev_w - 1) as f64, (self.bev_h - 1) as f64);
        [[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]]
    }

    fn corner_indices(&self) -> [usize; 4] {
        let (w, h) = (self.bev_w, self.bev_h);
        [0, w - 1, h * w - 1, (h - 1) * w]
    }
}

/// Which stage produced an update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeStage {
    Coarse,
    Fine,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decoded {
    pub displacement: CornerDisplacement,
    pub stage: DecodeStage,
    /// Incremental rotation and translation (map feature px) about the
    /// projected grid center.
    pub rotation_rad: f64,
    pub translation: [f64; 2],
    pub mean_flow_px: f64,
    pub mean_confidence: f64,
    pub insufficient_evidence: bool,
}

/// Vertex of the parabola through `(-1, a)`, `(0, b)`, `(1, c)`, clamped to
/// `[-0.5, 0.5]`.
fn parabolic_peak(a: f64, b: f64, c: f64) -> f64 {
    let den = a - 2.0 * b + c;
    if den < 0.0 {
        (0.5 * (a - c) / den).clamp(-0.5, 0.5)
    } else {
        0.0
    }
}

fn rotate(v: [f64; 2], angle: f64) -> [f64; 2] {
    let (s, c) = angle.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

/// Pooled search over rotation candidates and integer translations on the
/// half-resolution windows. Returns the best rotation and translation (full
/// map feature px), refined to sub-cell precision.
fn coarse_search(win: &CorrelationWindow, rel: &[[f64; 2]], weights: &[f64], geom: &DecodeGeometry, cfg: &RefinerConfig) -> (f64, [f64; 2]) {
    let r = win.radius as i64;
    let side = win.side();
    let stride = cfg.coarse_cell_stride.max(1);
    let cells: Vec<usize> = (0..geom.bev_h)
        .step_by(stride)
        .flat_map(|i| (0..geom.bev_w).step_by(stride).map(move |j| i * geom.bev_w + j))
        .filter(|c| weights[*c] > cfg.confidence_floor)
        .collect();
    let steps = cfg.coarse_rotation_steps as i64;
    let dtheta = cfg.coarse_rotation_step_deg.to_radians();
    let n_theta = (2 * steps + 1) as usize;
    let plane_len = side * side;
    let mut scores = vec![0.0f64; n_theta * plane_len];
    let total: f64 = cells.iter().map(|c| weights[*c]).sum::<f64>().max(f64::MIN_POSITIVE);
    for (ti, k) in (-steps..=steps).enumerate() {
        let angle = k as f64 * dtheta;
        let plane = &mut scores[ti * plane_len..(ti + 1) * plane_len];
        for &c in &cells {
            let rv = rel[c];
            let rot = rotate(rv, angle);
            // Half-resolution shift of this cell induced by the rotation.
            let d = [0.5 * (rot[0] - rv[0]), 0.5 * (rot[1] - rv[1])];
            let patch = win.half_patch(c);
            let w = weights[c] / total;
            // Resample the patch shifted by d: every offset shares the same
            // bilinear weights, only taps fully inside the patch contribute.
            let (ix, iy) = (d[0].floor() as i64, d[1].floor() as i64);
            let (fx, fy) = (d[0] - ix as f64, d[1] - iy as f64);
            let (w00, w10, w01, w11) = ((1.0 - fx) * (1.0 - fy) * w, fx * (1.0 - fy) * w, (1.0 - fx) * fy * w, fx * fy * w);
            let (ox_lo, ox_hi) = ((-r - ix).max(-r), (r - 1 - ix).min(r));
            let (oy_lo, oy_hi) = ((-r - iy).max(-r), (r - 1 - iy).min(r));
            let s = side as i64;
            for oy in oy_lo..=oy_hi {
                let src = (oy + r + iy) * s + r + ix;
                let dst = (oy + r) * s + r;
                for ox in ox_lo..=ox_hi {
                    let b = (src + ox) as usize;
                    plane[(dst + ox) as usize] += w00 * patch[b] as f64
                        + w10 * patch[b + 1] as f64
                        + w01 * patch[b + side] as f64
                        + w11 * patch[b + side + 1] as f64;
                }
            }
        }
    }
    let (best, best_score) = scores
        .iter()
        .enumerate()
        .fold((0usize, f64::NEG_INFINITY), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
    if !(best_score > 0.0) {
        return (0.0, [0.0; 2]);
    }
    let ti = best / plane_len;
    let (bx, by) = ((best % side) as i64, ((best % plane_len) / side) as i64);
    let at = |t: i64, x: i64, y: i64| -> Option<f64> {
        let ok = (0..n_theta as i64).contains(&t) && (0..side as i64).contains(&x) && (0..side as i64).contains(&y);
        ok.then(|| scores[t as usize * plane_len + y as usize * side + x as usize])
    };
    let sub = |a: Option<f64>, c: Option<f64>| match (a, c) {
        (Some(a), Some(c)) => parabolic_peak(a, best_score, c),
        _ => 0.0,
    };
    let t = ti as i64;
    let fx = sub(at(t, bx - 1, by), at(t, bx + 1, by));
    let fy = sub(at(t, bx, by - 1), at(t, bx, by + 1));
    let ft = sub(at(t - 1, bx, by), at(t + 1, bx, by));
    let angle = (t - steps) as f64 * dtheta + ft * dtheta;
    let ox = (bx - r) as f64 + fx;
    let oy = (by - r) as f64 + fy;
    (angle, [2.0 * ox, 2.0 * oy])
}

/// Per-cell quadratic model of the full-resolution window around its
/// center, accumulated into the normal equations of a small rigid (or
/// similarity) update. Returns `(angle, translation, log-scale)`.
fn fine_fit(win: &CorrelationWindow, rel: &[[f64; 2]], weights: &[f64], cfg: &RefinerConfig) -> Option<(f64, [f64; 2], f64)> {
    let side = win.side() as i64;
    let r = win.radius as i64;
    let n = if cfg.fit_model == FitModel::Similarity { 4 } else { 3 };
    let mut a = [[0.0f64; 4]; 4];
    let mut b = [0.0f64; 4];
    for (c, rv) in rel.iter().enumerate() {
        let w = weights[c];
        if w <= cfg.confidence_floor {
            continue;
        }
        let p = win.full_patch(c);
        let s = |dx: i64, dy: i64| p[((r + dy) * side + r + dx) as usize] as f64;
        let s0 = s(0, 0);
        let g = [(s(1, 0) - s(-1, 0)) * 0.5, (s(0, 1) - s(0, -1)) * 0.5];
        let hxx = s(1, 0) - 2.0 * s0 + s(-1, 0);
        let hyy = s(0, 1) - 2.0 * s0 + s(0, -1);
        let hxy = (s(1, 1) - s(1, -1) - s(-1, 1) + s(-1, -1)) * 0.25;
        let info = psd_information(-hxx, -hxy, -hyy);
        // d(cell shift)/d(rotation, tx, ty, log-scale)
        let jac = [[-rv[1], 1.0, 0.0, rv[0]], [rv[0], 0.0, 1.0, rv[1]]];
        for i in 0..n {
            let ig = [
                info[0][0] * jac[0][i] + info[0][1] * jac[1][i],
                info[1][0] * jac[0][i] + info[1][1] * jac[1][i],
            ];
            for j in 0..n {
                a[i][j] += w * (ig[0] * jac[0][j] + ig[1] * jac[1][j]);
            }
            b[i] += w * (g[0] * jac[0][i] + g[1] * jac[1][i]);
        }
    }
    let trace: f64 = (0..n).map(|i| a[i][i]).sum();
    if !(trace > 0.0) {
        return None;
    }
    for (i, row) in a.iter_mut().enumerate().take(n) {
        row[i] += 1e-9 * trace;
    }
    let x = solve_small(&mut a, &mut b, n)?;
    Some((x[0], [x[1], x[2]], if n == 4 { x[3] } else { 0.0 }))
}

/// Symmetric 2x2 matrix `[[m00, m01], [m01, m11]]` with negative eigenvalues
/// clipped to zero.
fn psd_information(m00: f64, m01: f64, m11: f64) -> [[f64; 2]; 2] {
    let tr = 0.5 * (m00 + m11);
    let disc = (0.25 * (m00 - m11).powi(2) + m01 * m01).sqrt();
    let (l1, l2) = ((tr + disc).max(0.0), (tr - disc).max(0.0));
    let (vx, vy) = if m01.abs() > 1e-15 {
        let v = [tr + disc - m11, m01];
        let norm = v[0].hypot(v[1]);
        (v[0] / norm, v[1] / norm)
    } else if m00 >= m11 {
        (1.0, 0.0)
    } else {
        (0.0, 1.0)
    };
    [
        [l1 * vx * vx + l2 * vy * vy, (l1 - l2) * vx * vy],
        [(l1 - l2) * vx * vy, l1 * vy * vy + l2 * vx * vx],
    ]
}

/// Gaussian elimination with partial pivoting on the leading `n x n` block.
fn solve_small(a: &mut [[f64; 4]; 4], b: &mut [f64; 4], n: usize) -> Option<[f64; 4]> {
    for col in 0..n {
        let piv = (col..n).max_by(|i, j| a[*i][col].abs().total_cmp(&a[*j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Turns correlation windows into an incremental corner displacement (in map
/// feature pixels) for the current projected coordinates `coords`.
///
/// A pooled coarse search over the half-resolution windows runs first; when
/// it finds the evidence already centered, a fine quadratic fit on the
/// full-resolution windows takes over.
pub fn decode_displacement(win: &CorrelationWindow, coords: &[[f64; 2]], geom: &DecodeGeometry, cfg: &RefinerConfig) -> Result<Decoded> {
    let cells = geom.bev_w * geom.bev_h;
    if win.radius != cfg.radius {
        return Err(Error::InvalidArgument(format!(
            "window radius {} does not match configured radius {}",
            win.radius, cfg.radius
        )));
    }
    if win.cells != cells || coords.len() != cells {
        return Err(Error::DimensionMismatch(format!(
            "{} windows / {} coordinates for {cells} cells",
            win.cells,
            coords.len()
        )));
    }
    let weights: Vec<f64> = (0..cells)
        .map(|c| {
            let peak = win.full_patch(c).iter().chain(win.half_patch(c)).fold(0.0f32, |a, v| a.max(*v));
            (peak as f64).max(cfg.confidence_floor)
        })
        .collect();
    let mass: f64 = weights.iter().sum();
    let mean_confidence = mass / cells as f64;
    if mass < 4.0 * cfg.confidence_floor * cells as f64 {
        return Ok(Decoded {
            displacement: CornerDisplacement::ZERO,
            stage: DecodeStage::None,
            rotation_rad: 0.0,
            translation: [0.0; 2],
            mean_flow_px: 0.0,
            mean_confidence,
            insufficient_evidence: true,
        });
    }

    let center = coords.iter().fold([0.0; 2], |a, p| [a[0] + p[0], a[1] + p[1]]);
    let center = [center[0] / cells as f64, center[1] / cells as f64];
    let rel: Vec<[f64; 2]> = coords.iter().map(|p| [p[0] - center[0], p[1] - center[1]]).collect();

    let (coarse_angle, coarse_t) = coarse_search(win, &rel, &weights, geom, cfg);
    let coarse = coarse_angle.abs() > 0.5 * cfg.coarse_rotation_step_deg.to_radians()
        || coarse_t[0].abs() > 1.0
        || coarse_t[1].abs() > 1.0;
    let (angle, t, log_scale, stage) = if coarse {
        (coarse_angle, coarse_t, 0.0, DecodeStage::Coarse)
    } else {
        match fine_fit(win, &rel, &weights, cfg) {
            Some((a, t, s)) => {
                // Trust region: the quadratic model is only valid within about a cell.
                let shrink = t[0].hypot(t[1]).max(1.0);
                (a.clamp(-0.05, 0.05), [t[0] / shrink, t[1] / shrink], s.clamp(-0.05, 0.05), DecodeStage::Fine)
            }
            None => (0.0, [0.0; 2], 0.0, DecodeStage::None),
        }
    };

    let scale = log_scale.exp();
    let idx = geom.corner_indices();
    let mut offsets = [[0.0; 2]; 4];
    for (k, &ci) in idx.iter().enumerate() {
        let moved = rotate([rel[ci][0] * scale, rel[ci][1] * scale], angle);
        let target = [center[0] + moved[0] + t[0], center[1] + moved[1] + t[1]];
        offsets[k] = [
            cfg.step_damping * (target[0] - coords[ci][0]),
            cfg.step_damping * (target[1] - coords[ci][1]),
        ];
    }
    let mean_flow_px = rel
        .iter()
        .map(|rv| {
            let m = rotate([rv[0] * scale, rv[1] * scale], angle);
            (m[0] - rv[0] + t[0]).hypot(m[1] - rv[1] + t[1])
        })
        .sum::<f64>()
        / cells as f64;
    let diag = (geom.bev_w as f64).hypot(geom.bev_h as f64);
    Ok(Decoded {
        displacement: CornerDisplacement::new(offsets)?.clamped(diag),
        stage,
        rotation_rad: angle,
        translation: t,
        mean_flow_px,
        mean_confidence,
        insufficient_evidence: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const N: usize = 16;

    fn geom() -> DecodeGeometry {
        DecodeGeometry {
            bev_w: N,
            bev_h: N,
            scale: 0.5,
        }
    }

    fn coords() -> Vec<[f64; 2]> {
        (0..N * N).map(|c| [(c % N) as f64 + 20.0, (c / N) as f64 + 20.0]).collect()
    }

    /// Windows built from per-cell peak offsets `d` (full px) with the given
    /// profile of the squared distance to the peak.
    fn windows(cfg: &RefinerConfig, d: &[[f64; 2]], profile: impl Fn(f64) -> f64) -> CorrelationWindow {
        let r = cfg.radius as i64;
        let side = (2 * r + 1) as usize;
        let mut win = CorrelationWindow {
            radius: cfg.radius,
            cells: d.len(),
            full: vec![0.0; d.len() * side * side],
            half: vec![0.0; d.len() * side * side],
        };
        for (c, dc) in d.iter().enumerate() {
            for oy in -r..=r {
                for ox in -r..=r {
                    let k = c * side * side + ((oy + r) as usize) * side + (ox + r) as usize;
                    let (fx, fy) = (ox as f64 - dc[0], oy as f64 - dc[1]);
                    let (hx, hy) = (ox as f64 - 0.5 * dc[0], oy as f64 - 0.5 * dc[1]);
                    win.full[k] = profile(fx * fx + fy * fy) as f32;
                    win.half[k] = profile(hx * hx + hy * hy) as f32;
                }
            }
        }
        win
    }

    fn delta(q: f64) -> f64 {
        if q < 1e-12 {
            1.0
        } else {
            0.0
        }
    }

    #[test]
    fn centered_peaks_give_zero_displacement() {
        let cfg = RefinerConfig::default();
        let win = windows(&cfg, &vec![[0.0; 2]; N * N], delta);
        let out = decode_displacement(&win, &coords(), &geom(), &cfg).unwrap();
        assert_eq!(out.displacement, CornerDisplacement::ZERO);
        assert!(!out.insufficient_evidence);
    }

    #[test]
    fn integer_shift_is_pure_translation() {
        for damping in [1.0, 0.5] {
            let cfg = RefinerConfig {
                step_damping: damping,
                ..Default::default()
            };
            let win = windows(&cfg, &vec![[2.0, 0.0]; N * N], delta);
            let out = decode_displacement(&win, &coords(), &geom(), &cfg).unwrap();
            assert_eq!(out.stage, DecodeStage::Coarse);
            for o in out.displacement.offsets {
                assert!((o[0] - 2.0 * damping).abs() < 1e-12 && o[1].abs() < 1e-12, "{o:?}");
            }
        }
    }

    #[test]
    fn small_rotation_recovered() {
        let cfg = RefinerConfig::default();
        let xs = coords();
        let c = xs.iter().fold([0.0; 2], |a, p| [a[0] + p[0] / (N * N) as f64, a[1] + p[1] / (N * N) as f64]);
        let angle = 2f64.to_radians();
        let d: Vec<[f64; 2]> = xs
            .iter()
            .map(|p| {
                let rel = [p[0] - c[0], p[1] - c[1]];
                let m = rotate(rel, angle);
                [m[0] - rel[0], m[1] - rel[1]]
            })
            .collect();
        let win = windows(&cfg, &d, |q| 1.0 - q / 400.0);
        let out = decode_displacement(&win, &xs, &geom(), &cfg).unwrap();
        assert!((out.rotation_rad - angle).abs() < 0.1f64.to_radians(), "{}", out.rotation_rad.to_degrees());
    }

    #[test]
    fn empty_windows_flag_insufficient_evidence() {
        let cfg = RefinerConfig::default();
        let win = windows(&cfg, &vec![[0.0; 2]; N * N], |_| 0.0);
        let out = decode_displacement(&win, &coords(), &geom(), &cfg).unwrap();
        assert!(out.insufficient_evidence);
        assert_eq!(out.displacement, CornerDisplacement::ZERO);
    }

    #[test]
    fn radius_mismatch_rejected() {
        let cfg = RefinerConfig::default();
        let win = windows(&RefinerConfig { radius: 2, ..cfg }, &vec![[0.0; 2]; N * N], delta);
        assert!(matches!(
            decode_displacement(&win, &coords(), &geom(), &cfg),
            Err(Error::InvalidArgument(_))
        ));
        assert!(decode_displacement(&win, &coords()[1..], &geom(), &RefinerConfig { radius: 2, ..cfg }).is_err());
    }

    #[test]
    fn soft_argmax_centers_and_shifts() {
        let mut patch = vec![0.0f32; 9];
        patch[4] = 1.0;
        let s = soft_argmax(&patch, 1, 0.01);
        assert!(s[0].abs() < 1e-12 && s[1].abs() < 1e-12);
        patch[4] = 0.0;
        patch[5] = 1.0;
        let s = soft_argmax(&patch, 1, 1e-3);
        assert!((s[0] - 1.0).abs() < 1e-12 && s[1].abs() < 1e-12);
    }

    #[test]
    fn psd_clips_negative_curvature() {
        let m = psd_information(1.0, 0.0, -2.0);
        assert_eq!(m, [[1.0, 0.0], [0.0, 0.0]]);
        let m = psd_information(2.0, 1.0, 2.0);
        assert!((m[0][0] - 2.0).abs() < 1e-12 && (m[0][1] - 1.0).abs() < 1e-12);
    }
}
