use serde::{Deserialize, Serialize};

use super::{mat_mul, Homography33, Mat3};
use crate::error::{Error, Result};

/// Offsets applied to the four grid corners, ordered top-left, top-right,
/// bottom-right, bottom-left.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CornerDisplacement {
    pub offsets: [[f64; 2]; 4],
}

impl CornerDisplacement {
    pub const ZERO: CornerDisplacement = CornerDisplacement { offsets: [[0.0; 2]; 4] };

    pub fn new(offsets: [[f64; 2]; 4]) -> Result<Self> {
        if offsets.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("corner displacement is not finite".into()));
        }
        Ok(Self { offsets })
    }

    pub fn uniform(du: f64, dv: f64) -> Self {
        Self { offsets: [[du, dv]; 4] }
    }

    /// Scales every offset down so none is longer than `max_norm`.
    pub fn clamped(mut self, max_norm: f64) -> Self {
        for o in &mut self.offsets {
            let n = o[0].hypot(o[1]);
            if n > max_norm {
                o[0] *= max_norm / n;
                o[1] *= max_norm / n;
            }
        }
        self
    }

    pub fn apply_to(&self, corners: &[[f64; 2]; 4]) -> [[f64; 2]; 4] {
        let mut out = *corners;
        for (p, d) in out.iter_mut().zip(&self.offsets) {
            p[0] += d[0];
            p[1] += d[1];
        }
        out
    }

    pub fn mean_norm(&self) -> f64 {
        self.offsets.iter().map(|o| o[0].hypot(o[1])).sum::<f64>() / 4.0
    }
}

fn check_corners(pts: &[[f64; 2]; 4]) -> Result<()> {
    if pts.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateCorners("non-finite corner"));
    }
    let mut scale = 0.0f64;
    for a in pts {
        for b in pts {
            scale = scale.max((a[0] - b[0]).hypot(a[1] - b[1]));
        }
    }
    if scale == 0.0 {
        return Err(Error::DegenerateCorners("all corners coincide"));
    }
    for skip in 0..4 {
        let t: Vec<&[f64; 2]> = pts.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, p)| p).collect();
        let cross = (t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[1][1] - t[0][1]) * (t[2][0] - t[0][0]);
        if cross.abs() <= 1e-9 * scale * scale {
            return Err(Error::DegenerateCorners("three corners are collinear"));
        }
    }
    Ok(())
}

/// Similarity that moves the centroid to the origin and sets the mean
/// distance to sqrt(2). Returns the matrix and the transformed points.
fn normalize(pts: &[[f64; 2]; 4]) -> (Mat3, [[f64; 2]; 4]) {
    let cx = pts.iter().map(|p| p[0]).sum::<f64>() / 4.0;
    let cy = pts.iter().map(|p| p[1]).sum::<f64>() / 4.0;
    let mean = pts.iter().map(|p| (p[0] - cx).hypot(p[1] - cy)).sum::<f64>() / 4.0;
    let s = std::f64::consts::SQRT_2 / mean;
    let t = [[s, 0.0, -s * cx], [0.0, s, -s * cy], [0.0, 0.0, 1.0]];
    let mut out = [[0.0; 2]; 4];
    for (o, p) in out.iter_mut().zip(pts) {
        *o = [s * (p[0] - cx), s * (p[1] - cy)];
    }
    (t, out)
}

/// Solves `a x = b` in place by Gaussian elimination with partial pivoting.
fn solve8(mut a: [[f64; 9]; 8]) -> Option<[f64; 8]> {
    for col in 0..8 {
        let pivot = (col..8).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        for row in col + 1..8 {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..9 {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    let mut x = [0.0; 8];
    for row in (0..8).rev() {
        let mut acc = a[row][8];
        for k in row + 1..8 {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Homography taking each `src[i]` to `dst[i]`, from the 8x8 DLT system with
/// `h33` fixed to 1 (solved in normalized coordinates).
pub fn dlt_solve(src: &[[f64; 2]; 4], dst: &[[f64; 2]; 4]) -> Result<Homography33> {
    check_corners(src)?;
    check_corners(dst)?;
    let (ts, ns) = normalize(src);
    let (td, nd) = normalize(dst);

    let mut a = [[0.0; 9]; 8];
    for i in 0..4 {
        let [x, y] = ns[i];
        let [u, v] = nd[i];
        a[2 * i] = [x, y, 1.0, 0.0, 0.0, 0.0, -x * u, -y * u, u];
        a[2 * i + 1] = [0.0, 0.0, 0.0, x, y, 1.0, -x * v, -y * v, v];
    }
    let h = solve8(a).ok_or(Error::DegenerateCorners("singular DLT system"))?;
    let hn = [[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], 1.0]];

    let s = td[0][0];
    let td_inv = [[1.0 / s, 0.0, -td[0][2] / s], [0.0, 1.0 / s, -td[1][2] / s], [0.0, 0.0, 1.0]];
    let m = mat_mul(&td_inv, &mat_mul(&hn, &ts));
    if m[2][2] == 0.0 || !m[2][2].is_finite() {
        return Err(Error::DegenerateCorners("singular DLT solution"));
    }
    let mut h8 = [0.0; 8];
    for (k, v) in h8.iter_mut().enumerate() {
        *v = m[k / 3][k % 3] / m[2][2];
    }
    // Denormalizing divides by a possibly small h33, so polish against the
    // raw system.
    refine(src, dst, &mut h8);
    Homography33::new([[h8[0], h8[1], h8[2]], [h8[3], h8[4], h8[5]], [h8[6], h8[7], 1.0]])
        .map_err(|_| Error::DegenerateCorners("singular DLT solution"))
}

/// `a * b` as an unevaluated sum `p + e`.
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// `a + b` as an unevaluated sum `s + e`.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Iterative refinement of `h` against the unnormalized 8x8 system. The
/// residual is accumulated in doubled precision, with the `-u x` style
/// coefficients kept exact, so the result converges to the solution of the
/// exact system rather than the rounded one.
fn refine(src: &[[f64; 2]; 4], dst: &[[f64; 2]; 4], h: &mut [f64; 8]) {
    for _ in 0..2 {
        let mut a = [[0.0; 9]; 8];
        for i in 0..4 {
            let [x, y] = src[i];
            let [u, v] = dst[i];
            for (r, w) in [(2 * i, u), (2 * i + 1, v)] {
                let base = if r % 2 == 0 { 0 } else { 3 };
                // Row coefficients as exact pairs (hi, lo).
                let mut coef = [(0.0, 0.0); 8];
                coef[base] = (x, 0.0);
                coef[base + 1] = (y, 0.0);
                coef[base + 2] = (1.0, 0.0);
                coef[6] = two_prod(-w, x);
                coef[7] = two_prod(-w, y);
                let (mut acc, mut err) = (w, 0.0);
                for (k, &(hi, lo)) in coef.iter().enumerate() {
                    let (t, te) = two_prod(hi, h[k]);
                    let (s, se) = two_sum(acc, -t);
                    acc = s;
                    err += se - te - lo * h[k];
                }
                for (k, c) in coef.iter().enumerate() {
                    a[r][k] = c.0;
                }
                a[r][8] = acc + err;
            }
        }
        match solve8(a) {
            Some(d) if d.iter().all(|v| v.is_finite()) => {
                for (x, dx) in h.iter_mut().zip(d) {
                    *x += dx;
                }
            }
            _ => return,
        }
    }
}

/// `dlt_solve(base, base + d)`.
pub fn corners_to_homography(base: &[[f64; 2]; 4], d: &CornerDisplacement) -> Result<Homography33> {
    dlt_solve(base, &d.apply_to(base))
}
