//! Iterative pose refinement over a prebuilt correlation volume.

mod decode;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::correlation::{
    build_volume_with, embed_features, sample_windows, volume_builds_on_this_thread, EmbedConfig, FEATURE_STRIDE,
};
use crate::error::{Error, Result};
use crate::homography::{corners_to_homography, homography_from_pose, pose_from_homography, CornerDisplacement, Homography33};
use crate::osm_map::RasterGrid;
use crate::par::Execution;
use crate::pose::Pose3DoF;

pub use decode::{decode_displacement, soft_argmax, DecodeGeometry, DecodeStage, Decoded, FitModel};

/// Flag recorded when an iteration found too little correlation mass to move.
pub const FLAG_INSUFFICIENT_EVIDENCE: &str = "insufficient_evidence";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefinerConfig {
    pub iterations: usize,
    pub radius: usize,
    pub softargmax_temperature: f64,
    pub step_damping: f64,
    pub confidence_floor: f64,
    pub dv_px: f64,
    pub fit_model: FitModel,
    /// Rotation candidates per side in the pooled coarse search.
    pub coarse_rotation_steps: usize,
    pub coarse_rotation_step_deg: f64,
    /// Cell subsampling stride of the coarse search.
    pub coarse_cell_stride: usize,
    pub embed: EmbedConfig,
}

impl Default for RefinerConfig {
    fn default() -> Self {
        Self {
            iterations: 6,
            radius: 6,
            softargmax_temperature: 0.1,
            step_damping: 1.0,
            confidence_floor: 1e-6,
            dv_px: crate::homography::DEFAULT_DV_PX,
            fit_model: FitModel::RigidFixedScale,
            coarse_rotation_steps: 3,
            coarse_rotation_step_deg: 5.0,
            coarse_cell_stride: 2,
            embed: EmbedConfig::default(),
        }
    }
}

impl RefinerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("refiner config: {what} ({self:?})")));
        if self.iterations < 1 {
            return bad("iterations must be >= 1");
        }
        if self.radius < 1 {
            return bad("radius must be >= 1");
        }
        if !(self.softargmax_temperature > 0.0) {
            return bad("temperature must be > 0");
        }
        if !(self.step_damping > 0.0 && self.step_damping <= 1.0) {
            return bad("step_damping must be in (0, 1]");
        }
        if !(self.confidence_floor >= 0.0) {
            return bad("confidence_floor must be >= 0");
        }
        if !(self.coarse_rotation_step_deg > 0.0 && self.coarse_rotation_step_deg < 90.0) || self.coarse_cell_stride < 1 {
            return bad("coarse search needs a step in (0, 90) degrees and a stride >= 1");
        }
        if !(self.dv_px > 0.0 && self.dv_px.is_finite()) {
            return bad("dv_px must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub homography: Homography33,
    pub pose: Pose3DoF,
    /// Mean per-cell flow magnitude in map feature pixels.
    pub mean_flow_px: f64,
    pub mean_confidence: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub insufficient_evidence: bool,
}

/// Wall-clock breakdown. Never part of equality or reproducible output.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    /// Embedding both inputs and building the volume.
    pub setup_s: f64,
    /// Project + sample + decode + update per iteration.
    pub iteration_s: Vec<f64>,
    pub total_s: f64,
}

impl Timing {
    /// Cost of the first iteration including the one-off setup.
    pub fn first_iteration_total_s(&self) -> f64 {
        self.setup_s + self.iteration_s.first().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalizationResult {
    pub pose: Pose3DoF,
    pub homography: Homography33,
    pub trace: Vec<IterationRecord>,
    pub flags: Vec<String>,
    pub volume_builds: u64,
    pub timing: Timing,
    pub config: RefinerConfig,
}

impl PartialEq for LocalizationResult {
    fn eq(&self, other: &Self) -> bool {
        self.pose == other.pose
            && self.homography == other.homography
            && self.trace == other.trace
            && self.flags == other.flags
            && self.volume_builds == other.volume_builds
            && self.config == other.config
    }
}

/// Maps every BEV feature cell center through `h` (which acts on input
/// pixels) and returns the result in map feature units, row-major.
pub fn project_coords(h: &Homography33, feat_h: usize, feat_w: usize) -> Result<Vec<[f64; 2]>> {
    let stride = FEATURE_STRIDE as f64;
    let offset = (stride - 1.0) / 2.0;
    let mut out = Vec::with_capacity(feat_h * feat_w);
    for i in 0..feat_h {
        for j in 0..feat_w {
            let p = h.apply([stride * j as f64 + offset, stride * i as f64 + offset])?;
            out.push([(p[0] - offset) / stride, (p[1] - offset) / stride]);
        }
    }
    Ok(out)
}

fn check_shapes(bev: &RasterGrid, map: &RasterGrid) -> Result<(usize, usize)> {
    for (name, g) in [("BEV", bev), ("map", map)] {
        if g.width() % FEATURE_STRIDE != 0 || g.height() % FEATURE_STRIDE != 0 {
            return Err(Error::BadShape(format!(
                "{name} grid {}x{} is not divisible by {FEATURE_STRIDE}",
                g.width(),
                g.height()
            )));
        }
    }
    if (bev.width(), bev.height()) != (map.width(), map.height()) {
        return Err(Error::BadShape(format!(
            "BEV grid {}x{} and map grid {}x{} give different feature grids",
            bev.width(),
            bev.height(),
            map.width(),
            map.height()
        )));
    }
    Ok((bev.height() / FEATURE_STRIDE, bev.width() / FEATURE_STRIDE))
}

/// Refines `h0` (BEV input pixels to map input pixels) for `cfg.iterations`
/// steps. The map patch spec must carry its world pose; the BEV spec center
/// is ignored.
pub fn localize(bev: &RasterGrid, map: &RasterGrid, h0: &Homography33, cfg: &RefinerConfig) -> Result<LocalizationResult> {
    localize_with(bev, map, h0, cfg, Execution::Sequential)
}

/// As [`localize`], with an explicit execution mode for the volume build.
pub fn localize_with(
    bev: &RasterGrid,
    map: &RasterGrid,
    h0: &Homography33,
    cfg: &RefinerConfig,
    exec: Execution,
) -> Result<LocalizationResult> {
    cfg.validate()?;
    let (fh, fw) = check_shapes(bev, map)?;
    let start = Instant::now();
    let builds_before = volume_builds_on_this_thread();

    let f_bev = embed_features(bev, &cfg.embed)?;
    let f_map = embed_features(map, &cfg.embed)?;
    let volume = build_volume_with(&f_bev, &f_map, exec)?;
    let setup_s = start.elapsed().as_secs_f64();

    let geom = DecodeGeometry {
        bev_w: fw,
        bev_h: fh,
        scale: bev.spec.resolution_mpp / map.spec.resolution_mpp,
    };
    let stride = FEATURE_STRIDE as f64;
    let offset = (stride - 1.0) / 2.0;
    let corners_in = geom.corner_cells().map(|c| [stride * c[0] + offset, stride * c[1] + offset]);

    let mut h = *h0;
    let mut trace = Vec::with_capacity(cfg.iterations);
    let mut flags = Vec::new();
    let mut iteration_s = Vec::with_capacity(cfg.iterations);
    for _ in 0..cfg.iterations {
        let t = Instant::now();
        let coords = project_coords(&h, fh, fw)?;
        let win = sample_windows(&volume, &coords, cfg.radius)?;
        let dec = decode_displacement(&win, &coords, &geom, cfg)?;
        if dec.insufficient_evidence {
            if !flags.iter().any(|f| f == FLAG_INSUFFICIENT_EVIDENCE) {
                flags.push(FLAG_INSUFFICIENT_EVIDENCE.to_string());
            }
        } else {
            let base = corners_in.map(|c| h.apply(c)).map(|r| r.unwrap_or([f64::NAN; 2]));
            if base.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::PointAtInfinity { denominator: 0.0 });
            }
            let d = CornerDisplacement::new(dec.displacement.offsets.map(|o| [o[0] * stride, o[1] * stride]))?;
            let update = corners_to_homography(&base, &d)?;
            h = update.compose(&h)?;
        }
        let pose = pose_from_homography(&h, &bev.spec, &map.spec, cfg.dv_px)?;
        iteration_s.push(t.elapsed().as_secs_f64());
        trace.push(IterationRecord {
            homography: h,
            pose,
            mean_flow_px: dec.mean_flow_px,
            mean_confidence: dec.mean_confidence,
            insufficient_evidence: dec.insufficient_evidence,
        });
    }
    let pose = trace.last().map(|r| r.pose).expect("at least one iteration");
    Ok(LocalizationResult {
        pose,
        homography: h,
        trace,
        flags,
        volume_builds: volume_builds_on_this_thread() - builds_before,
        timing: Timing {
            setup_s,
            iteration_s,
            total_s: start.elapsed().as_secs_f64(),
        },
        config: *cfg,
    })
}

/// Localizes starting from the homography implied by `prior`.
pub fn localize_from_prior(bev: &RasterGrid, map: &RasterGrid, prior: &Pose3DoF, cfg: &RefinerConfig) -> Result<LocalizationResult> {
    let h0 = homography_from_pose(prior, &bev.spec, &map.spec);
    localize(bev, map, &h0, cfg)
}
