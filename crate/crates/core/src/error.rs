use std::io;

use thiserror::Error;

/// Errors produced anywhere in the localization pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed OSM XML at byte {offset}: {message}")]
    MalformedXml { offset: u64, message: String },

    #[error("way {way} references missing node {node}")]
    DanglingNodeRef { way: i64, node: i64 },

    #[error("degenerate corner configuration: {0}")]
    DegenerateCorners(&'static str),

    #[error("point maps to infinity (projective denominator {denominator:e})")]
    PointAtInfinity { denominator: f64 },

    #[error("singular homography (det = {det:e})")]
    SingularHomography { det: f64 },

    #[error("bad shape: {0}")]
    BadShape(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("no results to aggregate")]
    EmptyResults,

    #[error("pose ({x:.1}, {y:.1}) lies outside map coverage with the required {margin_m} m margin")]
    OutOfCoverage { x: f64, y: f64, margin_m: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid raster file: {0}")]
    InvalidRaster(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
