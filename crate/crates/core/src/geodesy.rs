//! WGS84 geodetic → ECEF → local ENU conversion.
//!
//! Each map region is anchored at a fixed geodetic origin. An optional
//! constant (east, north) drift correction is added after the rotation so a
//! region whose source data is offset by a known amount can be re-aligned.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// WGS84 semi-major axis, meters.
pub const WGS84_A: f64 = 6_378_137.0;
/// WGS84 inverse flattening.
pub const WGS84_INV_F: f64 = 298.257_223_563;
/// WGS84 flattening.
pub const WGS84_F: f64 = 1.0 / WGS84_INV_F;
/// WGS84 semi-minor axis, meters.
pub const WGS84_B: f64 = WGS84_A * (1.0 - WGS84_F);
/// First eccentricity squared.
pub const WGS84_E2: f64 = WGS84_F * (2.0 - WGS84_F);

/// Upper bound on the drift correction magnitude, meters.
pub const MAX_DRIFT_M: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodeticPoint {
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub alt_m: f64,
}

impl GeodeticPoint {
    /// Validates latitude and normalizes longitude into `[-180, 180]`.
    pub fn new(lat_deg: f64, lon_deg: f64, alt_m: f64) -> Result<Self> {
        if !(lat_deg.is_finite() && lon_deg.is_finite() && alt_m.is_finite()) {
            return Err(Error::InvalidArgument("non-finite geodetic coordinate".into()));
        }
        if !(-90.0..=90.0).contains(&lat_deg) {
            return Err(Error::InvalidArgument(format!("latitude {lat_deg} outside [-90, 90]")));
        }
        let lon_deg = if (-180.0..=180.0).contains(&lon_deg) {
            lon_deg
        } else {
            (lon_deg + 180.0).rem_euclid(360.0) - 180.0
        };
        Ok(Self { lat_deg, lon_deg, alt_m })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcefPoint {
    pub x_m: f64,
    pub y_m: f64,
    pub z_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnuPoint {
    pub east_m: f64,
    pub north_m: f64,
    pub up_m: f64,
}

impl EnuPoint {
    /// Planar (east, north) part; map consumers ignore `up`.
    pub fn planar(&self) -> [f64; 2] {
        [self.east_m, self.north_m]
    }
}

/// Local tangent frame of one map region.
///
/// Serialized with the flat keys `origin_lat`, `origin_lon`, `origin_alt`,
/// `drift_e`, `drift_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FrameRecord", into = "FrameRecord")]
pub struct EnuFrame {
    pub origin: GeodeticPoint,
    pub drift_e_m: f64,
    pub drift_n_m: f64,
}

#[derive(Serialize, Deserialize)]
struct FrameRecord {
    origin_lat: f64,
    origin_lon: f64,
    #[serde(default)]
    origin_alt: f64,
    #[serde(default)]
    drift_e: f64,
    #[serde(default)]
    drift_n: f64,
}

impl TryFrom<FrameRecord> for EnuFrame {
    type Error = Error;

    fn try_from(r: FrameRecord) -> Result<Self> {
        let origin = GeodeticPoint::new(r.origin_lat, r.origin_lon, r.origin_alt)?;
        EnuFrame::with_drift(origin, r.drift_e, r.drift_n)
    }
}

impl From<EnuFrame> for FrameRecord {
    fn from(f: EnuFrame) -> Self {
        FrameRecord {
            origin_lat: f.origin.lat_deg,
            origin_lon: f.origin.lon_deg,
            origin_alt: f.origin.alt_m,
            drift_e: f.drift_e_m,
            drift_n: f.drift_n_m,
        }
    }
}

impl EnuFrame {
    pub fn new(origin: GeodeticPoint) -> Self {
        Self {
            origin,
            drift_e_m: 0.0,
            drift_n_m: 0.0,
        }
    }

    pub fn with_drift(origin: GeodeticPoint, drift_e_m: f64, drift_n_m: f64) -> Result<Self> {
        if !(drift_e_m.is_finite() && drift_n_m.is_finite()) || drift_e_m.hypot(drift_n_m) >= MAX_DRIFT_M {
            return Err(Error::InvalidArgument(format!(
                "drift ({drift_e_m}, {drift_n_m}) exceeds the {MAX_DRIFT_M} m sanity bound"
            )));
        }
        Ok(Self {
            origin,
            drift_e_m,
            drift_n_m,
        })
    }

    fn rotation(&self) -> [[f64; 3]; 3] {
        let (sp, cp) = self.origin.lat_deg.to_radians().sin_cos();
        let (sl, cl) = self.origin.lon_deg.to_radians().sin_cos();
        [
            [-sl, cl, 0.0],
            [-sp * cl, -sp * sl, cp],
            [cp * cl, cp * sl, sp],
        ]
    }
}

pub fn wgs84_to_ecef(p: GeodeticPoint) -> EcefPoint {
    let (sp, cp) = p.lat_deg.to_radians().sin_cos();
    let (sl, cl) = p.lon_deg.to_radians().sin_cos();
    let n = WGS84_A / (1.0 - WGS84_E2 * sp * sp).sqrt();
    EcefPoint {
        x_m: (n + p.alt_m) * cp * cl,
        y_m: (n + p.alt_m) * cp * sl,
        z_m: (n * (1.0 - WGS84_E2) + p.alt_m) * sp,
    }
}

pub fn ecef_to_enu(p: EcefPoint, frame: &EnuFrame) -> EnuPoint {
    let o = wgs84_to_ecef(frame.origin);
    let d = [p.x_m - o.x_m, p.y_m - o.y_m, p.z_m - o.z_m];
    let r = frame.rotation();
    let row = |i: usize| r[i][0] * d[0] + r[i][1] * d[1] + r[i][2] * d[2];
    EnuPoint {
        east_m: row(0) + frame.drift_e_m,
        north_m: row(1) + frame.drift_n_m,
        up_m: row(2),
    }
}

/// Inverse of [`ecef_to_enu`], drift included.
pub fn enu_to_ecef(p: EnuPoint, frame: &EnuFrame) -> EcefPoint {
    let o = wgs84_to_ecef(frame.origin);
    let l = [p.east_m - frame.drift_e_m, p.north_m - frame.drift_n_m, p.up_m];
    let r = frame.rotation();
    let col = |j: usize| r[0][j] * l[0] + r[1][j] * l[1] + r[2][j] * l[2];
    EcefPoint {
        x_m: o.x_m + col(0),
        y_m: o.y_m + col(1),
        z_m: o.z_m + col(2),
    }
}

pub fn wgs84_to_local(p: GeodeticPoint, frame: &EnuFrame) -> EnuPoint {
    ecef_to_enu(wgs84_to_ecef(p), frame)
}
