//! Homography-constrained 3-DoF localization of bird's-eye-view semantic
//! masks against rasterized OpenStreetMap patches.
//!
//! Pipeline: [`geodesy`] anchors OSM coordinates in a local ENU frame,
//! [`osm_map`] parses and rasterizes roads and buildings, [`correlation`]
//! embeds both rasters and builds the all-pairs correlation volume once,
//! [`refiner`] iterates window sampling, corner-displacement decoding and
//! DLT updates, and [`homography`] maps the final homography back to a pose.
//! [`evalkit`] generates synthetic samples and scores them.

pub mod correlation;
pub mod error;
pub mod evalkit;
pub mod geodesy;
pub mod homography;
pub mod osm_map;
pub mod par;
pub mod pose;
pub mod refiner;

pub use error::{Error, Result};
pub use homography::{CornerDisplacement, Homography33};
pub use osm_map::{GridSpec, RasterGrid, VectorMap};
pub use par::Execution;
pub use pose::Pose3DoF;
