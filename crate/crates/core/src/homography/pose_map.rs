use super::{mat_mul, Homography33};
use crate::error::{Error, Result};
use crate::osm_map::GridSpec;
use crate::pose::{wrap_angle, Pose3DoF};

/// Default offset of the auxiliary heading point below the BEV center, pixels.
pub const DEFAULT_DV_PX: f64 = 10.0;

/// Ground-truth homography from BEV pixels to map pixels for a vehicle at `p`.
///
/// The BEV grid is ego-centric: only its size and resolution are used, and
/// its center is placed at `p`. The result is affine with uniform scale
/// `bev_resolution / map_resolution`.
pub fn homography_from_pose(p: &Pose3DoF, bev_spec: &GridSpec, map_spec: &GridSpec) -> Homography33 {
    let bev_to_world = bev_spec.with_center(*p).pixel_to_world_matrix();
    let mut m = mat_mul(&map_spec.world_to_pixel_matrix(), &bev_to_world);
    m[2] = [0.0, 0.0, 1.0];
    Homography33::new(m).expect("similarity transforms with positive resolutions are invertible")
}

/// Recovers the vehicle pose encoded by `h`.
///
/// The BEV center `(u_c, v_c)` is projected into the map to get the position.
/// The heading comes from the auxiliary point `(u_c, v_c + dv_px)`: the angle
/// of the projected center→auxiliary direction in the metric map frame minus
/// the angle of the same offset in the BEV's own metric frame. Forward is
/// `-v` (up in the BEV image).
pub fn pose_from_homography(h: &Homography33, bev_spec: &GridSpec, map_spec: &GridSpec, dv_px: f64) -> Result<Pose3DoF> {
    if !(dv_px.is_finite() && dv_px > 0.0) {
        return Err(Error::InvalidArgument(format!("dv_px must be positive, got {dv_px}")));
    }
    let [uc, vc] = bev_spec.center_px();
    let center = map_spec.pixel_to_world(h.apply([uc, vc])?);
    let aux = map_spec.pixel_to_world(h.apply([uc, vc + dv_px])?);
    // The auxiliary offset (0, +dv) in pixels is (0, -dv) in metric axes.
    let reference = (-dv_px).atan2(0.0);
    let theta = (aux[1] - center[1]).atan2(aux[0] - center[0]) - reference;
    Ok(Pose3DoF::new(center[0], center[1], wrap_angle(theta)))
}
