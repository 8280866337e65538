//! 3-axis calibration: settling on the work plane removes roll, pitch and
//! height error; two orthogonal squeezes remove yaw and in-plane offset.

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blocks::BlockModel;
use crate::geometry::{
    from_zyx, geodesic_angle, level_rotation, reference_axis, reference_axis_of_rotation, rot_z,
    wrap_angle, yaw_of, zyx_angles, Axis,
};
use crate::Pose;

/// Largest tilt from which a released block settles onto its nearest face.
pub const DEFAULT_MAX_TILT: f64 = 0.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibrationError {
    #[error("unstable settle: tilt {tilt:.4} rad exceeds {max:.4} rad")]
    UnstableSettle { tilt: f64, max: f64 },
    #[error("squeeze missed: {0}")]
    SqueezeMissed(String),
}

/// Six-component error of `true` relative to `estimated`, expressed in the
/// estimated object frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseError {
    /// Roll, pitch, yaw of the relative rotation (ZYX factorization).
    pub rot_xyz: Vector3<f64>,
    pub trans_xyz: Vector3<f64>,
}

impl PoseError {
    pub fn max_abs(&self) -> f64 {
        self.rot_xyz.amax().max(self.trans_xyz.amax())
    }
}

pub fn decompose_error(estimated: &Pose, truth: &Pose) -> PoseError {
    let rel = estimated.inverse().compose(truth);
    PoseError {
        rot_xyz: zyx_angles(&rel.rotation),
        trans_xyz: rel.translation,
    }
}

pub fn recompose(estimated: &Pose, error: &PoseError) -> Pose {
    estimated.compose(&Pose::from_parts_unchecked(from_zyx(&error.rot_xyz), error.trans_xyz))
}

/// World position of the block's bounding-box center.
pub fn center_of(pose: &Pose, model: &BlockModel) -> Vector3<f64> {
    pose.transform_point(&model.bbox_center())
}

/// Places a block of rotation `rotation` with its bounding-box center at
/// `xy` and its lowest corner on the plane `z = plane_height`.
pub fn rest_on_plane(model: &BlockModel, rotation: Matrix3<f64>, xy: [f64; 2], plane_height: f64) -> Pose {
    let c = rotation * model.bbox_center();
    let min_z = model
        .bbox_corners(&Pose::from_rotation(rotation))
        .iter()
        .map(|p| p.z)
        .fold(f64::INFINITY, f64::min);
    Pose::from_parts_unchecked(
        rotation,
        Vector3::new(xy[0] - c.x, xy[1] - c.y, plane_height - min_z),
    )
}

/// Levels the block onto its nearest face without a tilt limit, keeping the
/// in-plane center position and yaw.
pub fn settle_unchecked(pose: &Pose, plane_height: f64, model: &BlockModel) -> Pose {
    let center = center_of(pose, model);
    rest_on_plane(model, level_rotation(&pose.rotation), [center.x, center.y], plane_height)
}

/// Tilt of the block's reference axis away from vertical.
pub fn tilt_of(pose: &Pose) -> f64 {
    let up = reference_axis(pose);
    (pose.rotation * up.unit::<f64>()).z.clamp(-1.0, 1.0).acos()
}

/// Snaps the nearest face flush onto the plane.
pub fn plane_settle(
    pose: &Pose,
    plane_height: f64,
    model: &BlockModel,
    max_tilt: f64,
) -> Result<Pose, CalibrationError> {
    let tilt = tilt_of(pose);
    if tilt > max_tilt {
        return Err(CalibrationError::UnstableSettle { tilt, max: max_tilt });
    }
    Ok(settle_unchecked(pose, plane_height, model))
}

/// Squeeze parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SqueezeSettings {
    pub max_opening: f64,
    /// Half-width of the uniform positioning error of each squeeze, meters.
    pub actuation_noise: f64,
}

/// Two orthogonal squeezes along the estimate's horizontal axes. The jaws
/// center the block on the estimate and align its faces with the estimate's
/// faces, which fixes yaw modulo a quarter turn.
pub fn orthogonal_squeeze<R: Rng + ?Sized>(
    truth: &Pose,
    estimated: &Pose,
    model: &BlockModel,
    settings: &SqueezeSettings,
    rng: &mut R,
) -> Result<Pose, CalibrationError> {
    let up_true = reference_axis(truth);
    let up_est = reference_axis(estimated);
    if up_true != up_est {
        return Err(CalibrationError::SqueezeMissed(format!(
            "block rests on face {} but the estimate on {}",
            up_true.negate(),
            up_est.negate()
        )));
    }
    let c_true = center_of(truth, model);
    let c_est = center_of(estimated, model);
    let offset = c_est - c_true;
    let horizontal: Vec<Axis> = [Axis::X, Axis::Y, Axis::Z]
        .into_iter()
        .filter(|&a| a != up_est.axis)
        .collect();
    let mut dirs = Vec::with_capacity(2);
    for &axis in &horizontal {
        let mut dir = estimated.rotation * axis.unit::<f64>();
        dir.z = 0.0;
        let dir = dir.normalize();
        let along = offset.dot(&dir);
        let range = (settings.max_opening - model.extent(axis)) / 2.0;
        if along.abs() > range {
            return Err(CalibrationError::SqueezeMissed(format!(
                "offset {:.4} m along object {:?} exceeds capture range {:.4} m",
                along.abs(),
                axis,
                range
            )));
        }
        dirs.push(dir);
    }

    let n = settings.actuation_noise;
    let lever = horizontal
        .iter()
        .map(|&a| model.extent(a) / 2.0)
        .fold(0.0f64, f64::max);
    let mut jitter = || (rng.random::<f64>() * 2.0 - 1.0) * n;
    let (e1, e2) = (jitter(), jitter());
    let yaw_noise = if lever > 0.0 { jitter() / lever } else { 0.0 };

    let quarter = std::f64::consts::FRAC_PI_2;
    let dyaw = yaw_of(&estimated.rotation) - yaw_of(&truth.rotation);
    let snapped = dyaw - quarter * (dyaw / quarter).round();
    let rotation = rot_z(wrap_angle(snapped + yaw_noise)) * truth.rotation;
    let target = c_est + dirs[0] * e1 + dirs[1] * e2;
    let local_c = rotation * model.bbox_center();
    Ok(Pose::from_parts_unchecked(
        rotation,
        Vector3::new(target.x - local_c.x, target.y - local_c.y, c_true.z - local_c.z),
    ))
}

/// Among the symmetry-equivalent descriptions of `truth`, the one closest in
/// rotation to `reference`.
pub fn closest_equivalent(truth: &Pose, reference: &Pose, model: &BlockModel) -> Pose {
    let mut best = *truth;
    let mut best_angle = f64::INFINITY;
    for s in model.symmetry.elements() {
        let r = truth.rotation * s;
        let angle = geodesic_angle(&r, &reference.rotation);
        if angle < best_angle - 1e-12 {
            best_angle = angle;
            best = Pose::from_parts_unchecked(r, truth.translation);
        }
    }
    best
}

/// Calibration settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalibrationSettings {
    pub squeeze: SqueezeSettings,
    pub max_tilt: f64,
}

/// Plane-projected estimate: what the block's pose of record becomes after
/// a successful calibration.
pub fn project_estimate(estimated: &Pose, plane_height: f64, model: &BlockModel) -> Pose {
    settle_unchecked(estimated, plane_height, model)
}

/// Settle then squeeze; returns the new true pose.
pub fn calibrate<R: Rng + ?Sized>(
    truth: &Pose,
    estimated: &Pose,
    model: &BlockModel,
    plane_height: f64,
    settings: &CalibrationSettings,
    rng: &mut R,
) -> Result<Pose, CalibrationError> {
    let settled = plane_settle(truth, plane_height, model, settings.max_tilt)?;
    let projected = project_estimate(estimated, plane_height, model);
    let settled = closest_equivalent(&settled, &projected, model);
    orthogonal_squeeze(&settled, &projected, model, &settings.squeeze, rng)
}

/// Whether `rotation` has an object axis exactly vertical.
pub fn is_level(rotation: &Matrix3<f64>, tol: f64) -> bool {
    let up = reference_axis_of_rotation(rotation);
    (rotation * up.unit::<f64>()).z > 1.0 - tol
}
