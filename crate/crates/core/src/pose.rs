use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Wraps an angle into `[-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    if (-PI..=PI).contains(&theta) {
        return theta;
    }
    let wrapped = (theta + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can land on exactly -pi for inputs equivalent to +pi; keep the sign of the input.
    if wrapped == -PI && theta > 0.0 {
        PI
    } else {
        wrapped
    }
}

/// Planar vehicle pose in the local ENU-derived map frame.
///
/// `theta_rad` is the rotation of the body frame (x right, y forward) relative
/// to (east, north): a pose with heading 0 faces north, positive headings turn
/// counter-clockwise.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose3DoF {
    #[serde(rename = "x")]
    pub x_m: f64,
    #[serde(rename = "y")]
    pub y_m: f64,
    #[serde(rename = "theta")]
    pub theta_rad: f64,
}

impl Pose3DoF {
    pub fn new(x_m: f64, y_m: f64, theta_rad: f64) -> Self {
        Self {
            x_m,
            y_m,
            theta_rad: wrap_angle(theta_rad),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x_m.is_finite() && self.y_m.is_finite() && self.theta_rad.is_finite()
    }

    /// Maps a point from the body frame into the map frame.
    pub fn transform_point(&self, local: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.theta_rad.sin_cos();
        [
            c * local[0] - s * local[1] + self.x_m,
            s * local[0] + c * local[1] + self.y_m,
        ]
    }

    /// Maps a map-frame point into the body frame.
    pub fn inverse_transform_point(&self, world: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.theta_rad.sin_cos();
        let dx = world[0] - self.x_m;
        let dy = world[1] - self.y_m;
        [c * dx + s * dy, -s * dx + c * dy]
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Pose3DoF) -> Pose3DoF {
        let [x, y] = self.transform_point([other.x_m, other.y_m]);
        Pose3DoF::new(x, y, self.theta_rad + other.theta_rad)
    }

    pub fn inverse(&self) -> Pose3DoF {
        let [x, y] = Pose3DoF::new(0.0, 0.0, -self.theta_rad).transform_point([-self.x_m, -self.y_m]);
        Pose3DoF::new(x, y, -self.theta_rad)
    }

    /// Euclidean distance between the two positions, meters.
    pub fn position_error(&self, other: &Pose3DoF) -> f64 {
        (self.x_m - other.x_m).hypot(self.y_m - other.y_m)
    }

    /// Absolute wrapped heading difference, degrees, rounded to 1e-9° so
    /// whole-degree inputs come back whole after the trip through radians.
    pub fn orientation_error_deg(&self, other: &Pose3DoF) -> f64 {
        let deg = wrap_angle(self.theta_rad - other.theta_rad).abs().to_degrees();
        (deg * 1e9).round() / 1e9
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_keeps_range() {
        for k in -20..20 {
            let a = 0.3 + k as f64 * 0.77;
            let w = wrap_angle(a);
            assert!((-PI..=PI).contains(&w));
            assert!(((a - w) / (2.0 * PI)).fract().abs() < 1e-9 || ((a - w) / (2.0 * PI)).fract().abs() > 1.0 - 1e-9);
        }
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), -PI);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        let p = Pose3DoF::new(3.0, -7.5, 2.1);
        let id = p.compose(&p.inverse());
        assert!(id.x_m.abs() < 1e-12 && id.y_m.abs() < 1e-12 && id.theta_rad.abs() < 1e-12);
    }

    #[test]
    fn heading_zero_faces_north() {
        let p = Pose3DoF::new(0.0, 0.0, 0.0);
        assert_eq!(p.transform_point([0.0, 1.0]), [0.0, 1.0]);
        let q = Pose3DoF::new(0.0, 0.0, std::f64::consts::FRAC_PI_2);
        let fwd = q.transform_point([0.0, 1.0]);
        assert!((fwd[0] + 1.0).abs() < 1e-12 && fwd[1].abs() < 1e-12);
    }

    #[test]
    fn orientation_error_wraps() {
        let a = Pose3DoF::new(0.0, 0.0, 179f64.to_radians());
        let b = Pose3DoF::new(0.0, 0.0, (-179f64).to_radians());
        assert!((a.orientation_error_deg(&b) - 2.0).abs() < 1e-9);
    }
}
