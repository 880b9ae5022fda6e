use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pose::Pose3DoF;

/// Uniform prior-pose perturbation: independent per-axis translation in
/// `[-max_trans_m, max_trans_m]` and heading in `[-max_rot_deg, max_rot_deg]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    pub max_trans_m: f64,
    pub max_rot_deg: f64,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            max_trans_m: 30.0,
            max_rot_deg: 30.0,
            seed: 0,
        }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_trans_m >= 0.0 && self.max_trans_m.is_finite())
            || !(self.max_rot_deg >= 0.0 && self.max_rot_deg.is_finite())
        {
            return Err(Error::InvalidArgument(format!("noise bounds must be finite and >= 0: {self:?}")));
        }
        Ok(())
    }

    /// Fresh generator seeded from `seed`.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Independent stream for item `index` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn symmetric(rng: &mut impl Rng, bound: f64) -> f64 {
    if bound > 0.0 {
        rng.random_range(-bound..=bound)
    } else {
        0.0
    }
}

pub fn perturb_pose(p: &Pose3DoF, nm: &NoiseModel, rng: &mut impl Rng) -> Pose3DoF {
    let dx = symmetric(rng, nm.max_trans_m);
    let dy = symmetric(rng, nm.max_trans_m);
    let dt = symmetric(rng, nm.max_rot_deg.to_radians());
    Pose3DoF::new(p.x_m + dx, p.y_m + dy, p.theta_rad + dt)
}
