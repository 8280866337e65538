//! Pre-defined grasp candidates, pick-grasp selection and collision filtering.
//!
//! Gripper frame convention: local `x` is the closure axis, local `z` points
//! from the gripper toward the object, and the origin is the grasp point.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blocks::BlockModel;
use crate::collision::{gripper_obbs, scene_collides, GripperModel};
use crate::geometry::{reference_axis, Axis, SignedAxis};
use crate::{Obb, Pose};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraspError {
    #[error("ungraspable: no feasible grasp candidate for block `{0}`")]
    Ungraspable(String),
}

/// Which of the two object axes orthogonal to the approach the jaws close
/// along, in `x, y, z` order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosurePlane {
    First,
    Second,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraspCandidate {
    /// Object face the gripper comes from; the gripper moves along its negation.
    pub approach: SignedAxis,
    pub closure_plane: ClosurePlane,
    pub offset_index: i8,
    pub gripper_pose_obj: Pose,
    /// Jaw gap before closing.
    pub opening: f64,
}

impl GraspCandidate {
    pub fn closure_axis(&self) -> Axis {
        closure_axes(self.approach.axis)[match self.closure_plane {
            ClosurePlane::First => 0,
            ClosurePlane::Second => 1,
        }]
    }

    /// Axis along which the offset positions are spread.
    pub fn free_axis(&self) -> Axis {
        let c = self.closure_axis();
        closure_axes(self.approach.axis)
            .into_iter()
            .find(|&a| a != c)
            .expect("two closure axes")
    }

    pub fn world_pose(&self, block_pose: &Pose) -> Pose {
        block_pose.compose(&self.gripper_pose_obj)
    }

    /// World boxes of both fingers when grasping the block at `block_pose`.
    pub fn finger_obbs(&self, block_pose: &Pose, gripper: &GripperModel) -> Option<[Obb; 2]> {
        gripper_obbs(gripper, &self.world_pose(block_pose), self.opening).ok()
    }
}

/// The two axes orthogonal to `approach`, in `x, y, z` order.
pub fn closure_axes(approach: Axis) -> [Axis; 2] {
    match approach {
        Axis::X => [Axis::Y, Axis::Z],
        Axis::Y => [Axis::X, Axis::Z],
        Axis::Z => [Axis::X, Axis::Y],
    }
}

/// How far the off-center candidates sit from the center position.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GraspOffset {
    /// Same distance for every axis.
    Distance(f64),
    /// Fraction of the block's bounding-box extent along the offset axis.
    ExtentFraction(f64),
}

impl GraspOffset {
    fn along(self, model: &BlockModel, axis: Axis) -> f64 {
        match self {
            GraspOffset::Distance(d) => d,
            GraspOffset::ExtentFraction(f) => f * model.extent(axis),
        }
    }
}

/// Gripper geometry and filtering parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct GraspSettings {
    pub gripper: GripperModel,
    pub offset_fraction: f64,
    pub clearance: f64,
    pub margin: f64,
}

impl Default for GraspSettings {
    fn default() -> Self {
        Self {
            gripper: GripperModel::default(),
            offset_fraction: 0.25,
            clearance: 0.004,
            margin: 0.0005,
        }
    }
}

impl GraspSettings {
    pub fn candidates(&self, model: &BlockModel) -> Vec<GraspCandidate> {
        enumerate_candidates(model, GraspOffset::ExtentFraction(self.offset_fraction), self.clearance)
    }
}

/// Gripper frame in object coordinates for one candidate.
fn gripper_frame(approach: SignedAxis, closure: Axis, origin: Vector3<f64>) -> Pose {
    let x = closure.unit::<f64>();
    let z = -approach.unit::<f64>();
    let y = z.cross(&x);
    Pose::from_parts_unchecked(Matrix3::from_columns(&[x, y, z]), origin)
}

/// All 36 candidates: six approach faces, two closure planes each, and
/// three positions along the remaining axis.
pub fn enumerate_candidates(
    model: &BlockModel,
    offset: GraspOffset,
    clearance: f64,
) -> Vec<GraspCandidate> {
    let center = model.bbox_center();
    let mut out = Vec::with_capacity(36);
    for approach in SignedAxis::ALL {
        let axes = closure_axes(approach.axis);
        for (plane, closure) in [(ClosurePlane::First, axes[0]), (ClosurePlane::Second, axes[1])] {
            let free = if closure == axes[0] { axes[1] } else { axes[0] };
            let d = offset.along(model, free);
            let opening = model.extent(closure) + clearance;
            for offset_index in [-1i8, 0, 1] {
                let origin = center + free.unit::<f64>() * (f64::from(offset_index) * d);
                out.push(GraspCandidate {
                    approach,
                    closure_plane: plane,
                    offset_index,
                    gripper_pose_obj: gripper_frame(approach, closure, origin),
                    opening,
                });
            }
        }
    }
    out
}

/// Reachability of a world gripper pose.
pub trait Reach: Sync {
    fn reachable(&self, gripper: &Pose) -> bool;
}

impl<F: Fn(&Pose) -> bool + Sync> Reach for F {
    fn reachable(&self, gripper: &Pose) -> bool {
        self(gripper)
    }
}

/// Accepts every pose.
pub struct AnyReach;

impl Reach for AnyReach {
    fn reachable(&self, _: &Pose) -> bool {
        true
    }
}

/// Box-shaped reachable volume for the grasp point plus a tilt limit on the
/// approach direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReachBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
    /// Largest angle between the approach motion and straight down, radians.
    pub max_tilt: f64,
}

impl Reach for ReachBox {
    fn reachable(&self, gripper: &Pose) -> bool {
        let t = gripper.translation;
        let inside = (0..3).all(|i| t[i] >= self.min[i] && t[i] <= self.max[i]);
        inside && approach_tilt(gripper) <= self.max_tilt + 1e-9
    }
}

/// Angle between the gripper's approach motion and world `-z`.
pub fn approach_tilt(gripper: &Pose) -> f64 {
    (-gripper.rotation[(2, 2)]).clamp(-1.0, 1.0).acos()
}

/// Whether one candidate is reachable and collision-free at `block_pose`.
pub fn candidate_feasible(
    candidate: &GraspCandidate,
    block_pose: &Pose,
    obstacles: &[Obb],
    settings: &GraspSettings,
    reach: &dyn Reach,
) -> bool {
    if !reach.reachable(&candidate.world_pose(block_pose)) {
        return false;
    }
    match candidate.finger_obbs(block_pose, &settings.gripper) {
        Some(fingers) => !scene_collides(&fingers, obstacles, settings.margin),
        None => false,
    }
}

/// Candidates whose fingers clear every obstacle and whose pose is reachable;
/// input order is preserved.
pub fn filter_feasible(
    candidates: &[GraspCandidate],
    block_pose: &Pose,
    obstacles: &[Obb],
    settings: &GraspSettings,
    reach: &dyn Reach,
) -> Vec<GraspCandidate> {
    candidates
        .iter()
        .filter(|c| candidate_feasible(c, block_pose, obstacles, settings, reach))
        .cloned()
        .collect()
}

/// Sort key: center position first, then the most horizontal world closure
/// axis, then enumeration order.
pub fn preference_key(candidate: &GraspCandidate, block_pose: &Pose, index: usize) -> (bool, i64, usize) {
    let closure_world = block_pose.rotation * candidate.gripper_pose_obj.rotation.column(0);
    let vertical = (closure_world.z.abs() * 1e9).round() as i64;
    (candidate.offset_index != 0, vertical, index)
}

/// Top-down grasp along the block's reference axis.
pub fn select_pick_grasp(
    model: &BlockModel,
    block_pose: &Pose,
    obstacles: &[Obb],
    settings: &GraspSettings,
    reach: &dyn Reach,
) -> Result<GraspCandidate, GraspError> {
    let up = reference_axis(block_pose);
    let candidates = settings.candidates(model);
    candidates
        .iter()
        .enumerate()
        .filter(|(_, c)| c.approach == up)
        .filter(|(_, c)| candidate_feasible(c, block_pose, obstacles, settings, reach))
        .min_by_key(|(i, c)| preference_key(c, block_pose, *i))
        .map(|(_, c)| c.clone())
        .ok_or_else(|| GraspError::Ungraspable(model.id.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::BlockLibrary;
    use crate::collision::ground_slab;
    use crate::geometry::{rot_x, rot_z};
    use std::collections::HashSet;

    fn brick() -> BlockModel {
        BlockLibrary::standard().get("brick").unwrap().clone()
    }

    fn resting(model: &BlockModel) -> Pose {
        Pose::from_translation(Vector3::new(0.0, 0.0, model.resting_height(SignedAxis::PZ)))
    }

    #[test]
    fn thirty_six_distinct_candidates() {
        let lib = BlockLibrary::standard();
        for m in lib.models() {
            let c = GraspSettings::default().candidates(m);
            assert_eq!(c.len(), 36);
            let keys: HashSet<_> = c
                .iter()
                .map(|g| (g.approach, g.closure_plane, g.offset_index))
                .collect();
            assert_eq!(keys.len(), 36);
        }
    }

    #[test]
    fn approach_and_closure_conventions() {
        let m = brick();
        for c in GraspSettings::default().candidates(&m) {
            let z = c.gripper_pose_obj.rotation.column(2).into_owned();
            assert!((z + c.approach.unit::<f64>()).norm() < 1e-9);
            let x = c.gripper_pose_obj.rotation.column(0).into_owned();
            assert!((x - c.closure_axis().unit::<f64>()).norm() < 1e-12);
            assert!((c.gripper_pose_obj.rotation.determinant() - 1.0).abs() < 1e-12);
            if c.offset_index == 0 {
                let to_center = m.bbox_center() - c.gripper_pose_obj.translation;
                assert!(to_center.norm() < 1e-9);
            }
        }
    }

    #[test]
    fn plus_x_approach_closes_along_y_then_z() {
        let c = GraspSettings::default().candidates(&brick());
        let px: Vec<_> = c.iter().filter(|g| g.approach == SignedAxis::PX).collect();
        assert_eq!(px[0].closure_axis(), Axis::Y);
        assert_eq!(px[3].closure_axis(), Axis::Z);
    }

    #[test]
    fn zero_offset_collapses_positions() {
        let c = enumerate_candidates(&brick(), GraspOffset::Distance(0.0), 0.004);
        let poses: HashSet<_> = c
            .iter()
            .map(|g| {
                let p = g.gripper_pose_obj;
                p.rotation
                    .iter()
                    .chain(p.translation.iter())
                    .map(|v| (v * 1e9).round() as i64)
                    .collect::<Vec<_>>()
            })
            .collect();
        assert_eq!(poses.len(), 12);
    }

    #[test]
    fn unobstructed_keeps_all() {
        let m = brick();
        let c = GraspSettings::default().candidates(&m);
        let kept = filter_feasible(&c, &Pose::identity(), &[], &GraspSettings::default(), &AnyReach);
        assert_eq!(kept, c);
    }

    #[test]
    fn lone_block_gets_top_down_center_grasp() {
        let m = brick();
        let pose = resting(&m);
        let g = select_pick_grasp(&m, &pose, &[ground_slab(0.0)], &GraspSettings::default(), &AnyReach)
            .unwrap();
        assert_eq!(g.approach, SignedAxis::PZ);
        assert_eq!(g.offset_index, 0);
        // Both closures are horizontal; enumeration order decides.
        assert_eq!(g.closure_axis(), Axis::X);
    }

    #[test]
    fn wall_forces_orthogonal_closure() {
        let m = brick();
        let pose = resting(&m);
        // Wall 5 mm beyond the +x face: no room for a 15 mm finger.
        let wall = Obb::axis_aligned(Vector3::new(0.04 + 0.005 + 0.01, 0.0, 0.05), Vector3::new(0.01, 0.2, 0.05));
        let obstacles = [ground_slab(0.0), wall];
        let g = select_pick_grasp(&m, &pose, &obstacles, &GraspSettings::default(), &AnyReach).unwrap();
        assert_eq!(g.closure_axis(), Axis::Y);
        assert_eq!(g.offset_index, 0);
    }

    #[test]
    fn boxed_in_block_is_ungraspable() {
        let m = brick();
        let pose = resting(&m);
        let walls = [
            ground_slab(0.0),
            Obb::axis_aligned(Vector3::new(0.05, 0.0, 0.05), Vector3::new(0.005, 0.2, 0.05)),
            Obb::axis_aligned(Vector3::new(-0.05, 0.0, 0.05), Vector3::new(0.005, 0.2, 0.05)),
            Obb::axis_aligned(Vector3::new(0.0, 0.03, 0.05), Vector3::new(0.2, 0.005, 0.05)),
            Obb::axis_aligned(Vector3::new(0.0, -0.03, 0.05), Vector3::new(0.2, 0.005, 0.05)),
        ];
        let r = select_pick_grasp(&m, &pose, &walls, &GraspSettings::default(), &AnyReach);
        assert_eq!(r, Err(GraspError::Ungraspable("brick".into())));
    }

    #[test]
    fn reach_predicate_filters_downward_faces() {
        let m = brick();
        let pose = resting(&m);
        let reach = ReachBox { min: [-1.0; 3], max: [1.0; 3], max_tilt: 100f64.to_radians() };
        let c = GraspSettings::default().candidates(&m);
        let kept = filter_feasible(&c, &pose, &[], &GraspSettings::default(), &reach);
        assert!(kept.iter().all(|g| g.approach != SignedAxis::NZ));
        assert_eq!(kept.len(), 30);
    }

    #[test]
    fn equivariant_under_block_motion() {
        let m = brick();
        let c = GraspSettings::default().candidates(&m);
        let moved = Pose::from_parts_unchecked(rot_z(0.7) * rot_x(0.3), Vector3::new(0.1, -0.2, 0.3));
        for g in &c {
            let a = g.world_pose(&moved);
            let b = moved.compose(&g.gripper_pose_obj);
            assert!(a.approx_eq(&b, 1e-12));
        }
    }
}
