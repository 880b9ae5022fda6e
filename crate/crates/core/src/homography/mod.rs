//! Planar homographies: the four-corner DLT solve, the corner-displacement
//! parameterization, and the exact mapping between a homography and a 3-DoF
//! pose.

mod dlt;
mod pose_map;

use serde::{Deserialize, Serialize};

pub use dlt::{corners_to_homography, dlt_solve, CornerDisplacement};
pub use pose_map::{homography_from_pose, pose_from_homography, DEFAULT_DV_PX};

pub use crate::pose::Pose3DoF;
use crate::error::{Error, Result};

/// Projective denominators closer to zero than this are treated as infinite.
pub const INFINITY_EPS: f64 = 1e-12;

pub type Mat3 = [[f64; 3]; 3];

pub(crate) fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Invertible 3x3 homography, normalized so `h33 = 1` whenever `h33 != 0`.
///
/// Serialized as 9 numbers, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 9]", into = "[f64; 9]")]
pub struct Homography33 {
    m: Mat3,
}

impl TryFrom<[f64; 9]> for Homography33 {
    type Error = Error;

    fn try_from(v: [f64; 9]) -> Result<Self> {
        Homography33::new([[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]])
    }
}

impl From<Homography33> for [f64; 9] {
    fn from(h: Homography33) -> Self {
        h.to_row_major()
    }
}

impl Homography33 {
    pub const IDENTITY: Homography33 = Homography33 {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub fn new(mut m: Mat3) -> Result<Self> {
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::SingularHomography { det: f64::NAN });
        }
        let h33 = m[2][2];
        if h33 != 0.0 {
            for v in m.iter_mut().flatten() {
                *v /= h33;
            }
        }
        let det = det3(&m);
        let scale = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        if !(det.abs() > 1e-14 * scale.powi(3)) {
            return Err(Error::SingularHomography { det });
        }
        Ok(Self { m })
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.m
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let m = &self.m;
        [m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2]]
    }

    pub fn det(&self) -> f64 {
        det3(&self.m)
    }

    pub fn is_affine(&self) -> bool {
        self.m[2][0] == 0.0 && self.m[2][1] == 0.0
    }

    /// `self * other`: applies `other` first.
    pub fn compose(&self, other: &Homography33) -> Result<Homography33> {
        Homography33::new(mat_mul(&self.m, &other.m))
    }

    pub fn inverse(&self) -> Result<Homography33> {
        let m = &self.m;
        let det = self.det();
        let cof = |a: usize, b: usize, c: usize, d: usize| m[a][b] * m[c][d] - m[a][d] * m[c][b];
        let adj = [
            [cof(1, 1, 2, 2), -cof(0, 1, 2, 2), cof(0, 1, 1, 2)],
            [-cof(1, 0, 2, 2), cof(0, 0, 2, 2), -cof(0, 0, 1, 2)],
            [cof(1, 0, 2, 1), -cof(0, 0, 2, 1), cof(0, 0, 1, 1)],
        ];
        let mut inv = adj;
        for v in inv.iter_mut().flatten() {
            *v /= det;
        }
        Homography33::new(inv)
    }

    /// Maps `(u, v)` through the homography with perspective division.
    pub fn apply(&self, p: [f64; 2]) -> Result<[f64; 2]> {
        let m = &self.m;
        let s = m[2][0] * p[0] + m[2][1] * p[1] + m[2][2];
        if s.abs() < INFINITY_EPS {
            return Err(Error::PointAtInfinity { denominator: s });
        }
        Ok([
            (m[0][0] * p[0] + m[0][1] * p[1] + m[0][2]) / s,
            (m[1][0] * p[0] + m[1][1] * p[1] + m[1][2]) / s,
        ])
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Homography33) -> f64 {
        self.to_row_major()
            .iter()
            .zip(other.to_row_major())
            .fold(0.0, |a, (x, y)| a.max((x - y).abs()))
    }
}

/// Free-function form of [`Homography33::apply`].
pub fn apply_homography(h: &Homography33, p: [f64; 2]) -> Result<[f64; 2]> {
    h.apply(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_maps_points_to_themselves() {
        assert_eq!(apply_homography(&Homography33::IDENTITY, [7.0, 9.0]).unwrap(), [7.0, 9.0]);
    }

    #[test]
    fn quarter_turn() {
        let h = Homography33::new([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let p = h.apply([1.0, 0.0]).unwrap();
        assert!(p[0].abs() < 1e-15 && (p[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn normalizes_h33() {
        let h = Homography33::new([[2.0, 0.0, 4.0], [0.0, 2.0, 6.0], [0.0, 0.0, 2.0]]).unwrap();
        assert_eq!(h.to_row_major(), [1.0, 0.0, 2.0, 0.0, 1.0, 3.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn rejects_singular() {
        assert!(Homography33::new([[1.0, 2.0, 0.0], [2.0, 4.0, 0.0], [0.0, 0.0, 1.0]]).is_err());
    }

    #[test]
    fn point_at_infinity() {
        let h = Homography33::new([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 1.0]]).unwrap();
        assert!(matches!(h.apply([-1.0, 3.0]), Err(Error::PointAtInfinity { .. })));
    }

    #[test]
    fn inverse_round_trip() {
        let h = Homography33::new([[1.1, 0.2, 5.0], [-0.1, 0.9, -3.0], [1e-4, 2e-4, 1.0]]).unwrap();
        let id = h.compose(&h.inverse().unwrap()).unwrap();
        assert!(id.max_abs_diff(&Homography33::IDENTITY) < 1e-12);
    }

    #[test]
    fn json_is_row_major_nine() {
        let h = Homography33::new([[1.0, 2.0, 3.0], [4.0, 6.0, 6.0], [7.0, 8.0, 1.0]]).unwrap();
        let s = serde_json::to_string(&h).unwrap();
        assert_eq!(s, "[1.0,2.0,3.0,4.0,6.0,6.0,7.0,8.0,1.0]");
        assert_eq!(serde_json::from_str::<Homography33>(&s).unwrap(), h);
    }
}
