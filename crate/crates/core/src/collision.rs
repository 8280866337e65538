//! Oriented bounding boxes, the 15-axis separating-axis test and the
//! two-cuboid gripper proxy.
//!
//! Grasp frame convention shared with the grasp and planner modules: the
//! closure axis is local `x`, the approach axis is local `z` pointing from the
//! gripper toward the object, and the frame origin is the grasp point.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Pose;
use crate::scalar::{lit, to_f64, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CollisionError {
    #[error("gripper opening {opening} m outside [0, {max}] m")]
    OpeningOutOfRange { opening: f64, max: f64 },
}

/// Oriented box: `orientation` columns are the box axes in the world frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Obb<T: Real> {
    pub center: Vector3<T>,
    pub half_extents: Vector3<T>,
    pub orientation: Matrix3<T>,
}

impl<T: Real> Obb<T> {
    pub fn new(center: Vector3<T>, half_extents: Vector3<T>, orientation: Matrix3<T>) -> Self {
        debug_assert!(half_extents.iter().all(|h| *h > T::zero()));
        Self {
            center,
            half_extents,
            orientation,
        }
    }

    pub fn axis_aligned(center: Vector3<T>, half_extents: Vector3<T>) -> Self {
        Self::new(center, half_extents, Matrix3::identity())
    }

    pub fn axis(&self, i: usize) -> Vector3<T> {
        self.orientation.column(i).into_owned()
    }

    /// Every half-extent grown by `by`.
    pub fn inflated(&self, by: T) -> Self {
        Self {
            half_extents: self.half_extents.add_scalar(by),
            ..*self
        }
    }

    /// The box moved by a rigid transform applied in the world frame.
    pub fn transformed(&self, t: &Pose<T>) -> Self {
        Self {
            center: t.transform_point(&self.center),
            half_extents: self.half_extents,
            orientation: t.rotation * self.orientation,
        }
    }

    pub fn corners(&self) -> [Vector3<T>; 8] {
        std::array::from_fn(|k| {
            let s = |bit: usize| if k & bit == 0 { -T::one() } else { T::one() };
            self.center
                + self.axis(0) * (s(1) * self.half_extents.x)
                + self.axis(1) * (s(2) * self.half_extents.y)
                + self.axis(2) * (s(4) * self.half_extents.z)
        })
    }

    /// Closed containment test.
    pub fn contains(&self, p: &Vector3<T>) -> bool {
        let local = self.orientation.transpose() * (p - self.center);
        (0..3).all(|i| local[i].abs() <= self.half_extents[i])
    }

    fn projection_radius(&self, axis: &Vector3<T>) -> T {
        (0..3).fold(T::zero(), |acc, i| {
            acc + self.half_extents[i] * self.axis(i).dot(axis).abs()
        })
    }
}

/// Largest gap between the projections of the two boxes over the 15 SAT axes.
///
/// Positive: the boxes are separated by at least this distance. Negative: the
/// boxes overlap and the magnitude is the penetration depth (minimum
/// translation distance). Edge-pair axes whose cross product norm is below
/// 1e-9 are skipped.
pub fn obb_separation<T: Real>(a: &Obb<T>, b: &Obb<T>) -> T {
    let d = b.center - a.center;
    let gap = |axis: &Vector3<T>| d.dot(axis).abs() - a.projection_radius(axis) - b.projection_radius(axis);
    let mut best = -lit::<T>(1e30);
    for i in 0..3 {
        best = best.max(gap(&a.axis(i)));
        best = best.max(gap(&b.axis(i)));
    }
    let skip = lit::<T>(1e-9);
    for i in 0..3 {
        for j in 0..3 {
            let c = a.axis(i).cross(&b.axis(j));
            let n = c.norm();
            if n >= skip {
                best = best.max(gap(&(c / n)));
            }
        }
    }
    best
}

/// Whether the boxes, each inflated by `margin / 2`, overlap with positive
/// volume.
pub fn obb_intersect<T: Real>(a: &Obb<T>, b: &Obb<T>, margin: T) -> bool {
    let half = margin / lit(2.0);
    obb_separation(&a.inflated(half), &b.inflated(half)) < T::zero()
}

/// Penetration depth (zero when the boxes are disjoint or touching).
pub fn penetration_depth<T: Real>(a: &Obb<T>, b: &Obb<T>) -> T {
    (-obb_separation(a, b)).max(T::zero())
}

/// True iff any moving/obstacle pair intersects at `margin`.
pub fn scene_collides<T: Real>(moving: &[Obb<T>], obstacles: &[Obb<T>], margin: T) -> bool {
    moving
        .iter()
        .any(|m| obstacles.iter().any(|o| obb_intersect(m, o, margin)))
}

/// Two-finger parallel gripper as a pair of cuboids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GripperModel {
    /// Finger half-extents: `x` along closure (thickness), `y` across the
    /// finger, `z` along the approach (length).
    pub finger_half_extents: Vector3<f64>,
    pub max_opening: f64,
    /// How far the fingertips reach past the grasp point along the approach.
    pub tip_depth: f64,
}

impl Default for GripperModel {
    fn default() -> Self {
        Self {
            finger_half_extents: Vector3::new(0.0075, 0.0125, 0.025),
            max_opening: 0.14,
            tip_depth: 0.01,
        }
    }
}

impl GripperModel {
    pub fn thickness(&self) -> f64 {
        2.0 * self.finger_half_extents.x
    }

    /// Finger centers in the grasp frame for a jaw gap of `opening`.
    pub fn finger_offsets(&self, opening: f64) -> [Vector3<f64>; 2] {
        let x = opening / 2.0 + self.finger_half_extents.x;
        let z = self.tip_depth - self.finger_half_extents.z;
        [Vector3::new(x, 0.0, z), Vector3::new(-x, 0.0, z)]
    }
}

/// World boxes of both fingers; `opening` is the gap between the inner finger
/// faces, measured along the closure axis.
pub fn gripper_obbs(
    g: &GripperModel,
    grasp_pose: &Pose<f64>,
    opening: f64,
) -> Result<[Obb<f64>; 2], CollisionError> {
    if !(0.0..=g.max_opening).contains(&opening) {
        return Err(CollisionError::OpeningOutOfRange {
            opening,
            max: g.max_opening,
        });
    }
    let [a, b] = g.finger_offsets(opening);
    let make = |local: Vector3<f64>| {
        Obb::new(
            grasp_pose.transform_point(&local),
            g.finger_half_extents,
            grasp_pose.rotation,
        )
    };
    Ok([make(a), make(b)])
}

/// Large slab whose top face is the horizontal plane `z = height`.
pub fn ground_slab(height: f64) -> Obb<f64> {
    Obb::axis_aligned(
        Vector3::new(0.0, 0.0, height - 0.05),
        Vector3::new(5.0, 5.0, 0.05),
    )
}

/// Human-readable summary used in diagnostics.
pub fn describe<T: Real>(o: &Obb<T>) -> String {
    format!(
        "center=({:.4},{:.4},{:.4}) half=({:.4},{:.4},{:.4})",
        to_f64(o.center.x),
        to_f64(o.center.y),
        to_f64(o.center.z),
        to_f64(o.half_extents.x),
        to_f64(o.half_extents.y),
        to_f64(o.half_extents.z)
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{rot_x, rot_z};
    use std::f64::consts::FRAC_PI_4;

    fn unit(center: Vector3<f64>) -> Obb<f64> {
        Obb::axis_aligned(center, Vector3::repeat(0.5))
    }

    #[test]
    fn identical_boxes_intersect() {
        let a = unit(Vector3::zeros());
        assert!(obb_intersect(&a, &a, 0.0));
    }

    #[test]
    fn margin_closes_axis_aligned_gap() {
        let a = unit(Vector3::zeros());
        let b = unit(Vector3::new(3.0, 0.0, 0.0));
        assert!(!obb_intersect(&a, &b, 0.0));
        assert!(!obb_intersect(&a, &b, 1.99));
        assert!(obb_intersect(&a, &b, 2.01));
        assert!((obb_separation(&a, &b) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rotated_cube_reaches_across() {
        let a = unit(Vector3::zeros());
        let b = Obb::new(Vector3::new(1.4, 0.0, 0.0), Vector3::repeat(0.5), rot_z(FRAC_PI_4));
        // Diagonal reach √2/2 + 1/2 ≈ 1.207 < 1.4: separated along x.
        assert!(!obb_intersect(&a, &b, 0.0));
        let c = Obb::new(Vector3::new(1.1, 0.0, 0.0), Vector3::repeat(0.5), rot_z(FRAC_PI_4));
        assert!(obb_intersect(&a, &c, 0.0));
    }

    #[test]
    fn touching_faces_do_not_intersect_without_margin() {
        let a = unit(Vector3::zeros());
        let b = unit(Vector3::new(1.0, 0.0, 0.0));
        assert!(!obb_intersect(&a, &b, 0.0));
        assert!(obb_intersect(&a, &b, 1e-6));
        assert_eq!(penetration_depth(&a, &b), 0.0);
    }

    #[test]
    fn penetration_depth_of_overlap() {
        let a = unit(Vector3::zeros());
        let b = unit(Vector3::new(0.9, 0.05, 0.0));
        assert!((penetration_depth(&a, &b) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn gripper_fingers_at_identity() {
        let g = GripperModel::default();
        let [a, b] = gripper_obbs(&g, &Pose::identity(), 0.05).unwrap();
        let x = 0.025 + 0.0075;
        assert!((a.center - Vector3::new(x, 0.0, 0.01 - 0.025)).amax() < 1e-15);
        assert!((b.center - Vector3::new(-x, 0.0, 0.01 - 0.025)).amax() < 1e-15);
        // closed jaws: inner faces coincide, centers one finger thickness apart
        let [c, d] = gripper_obbs(&g, &Pose::identity(), 0.0).unwrap();
        assert!(((c.center - d.center).norm() - g.thickness()).abs() < 1e-15);
        assert!(!obb_intersect(&c, &d, 0.0));
        assert!(gripper_obbs(&g, &Pose::identity(), 0.2).is_err());
        assert!(gripper_obbs(&g, &Pose::identity(), -0.01).is_err());
    }

    #[test]
    fn empty_obstacles_never_collide() {
        let a = unit(Vector3::zeros());
        assert!(!scene_collides(&[a], &[], 1.0));
    }

    #[test]
    fn gripper_over_lone_block_clears() {
        // 80×40×30 mm brick on the ground, top-down grasp at its center closing along y.
        let brick = Obb::axis_aligned(Vector3::new(0.0, 0.0, 0.015), Vector3::new(0.04, 0.02, 0.015));
        let grasp = Pose::from_parts_unchecked(rot_x(std::f64::consts::PI) * rot_z(std::f64::consts::FRAC_PI_2), brick.center);
        let g = GripperModel::default();
        let fingers = gripper_obbs(&g, &grasp, 0.04 + 0.004).unwrap();
        // fingertips end 5 mm above the ground, inner faces 2 mm off the brick
        assert!(!scene_collides(&fingers, &[brick, ground_slab(0.0)], 0.0005));
        // a pocket narrower than the finger span
        let wall_a = Obb::axis_aligned(Vector3::new(0.0, 0.035, 0.02), Vector3::new(0.05, 0.01, 0.02));
        let wall_b = Obb::axis_aligned(Vector3::new(0.0, -0.035, 0.02), Vector3::new(0.05, 0.01, 0.02));
        assert!(scene_collides(&fingers, &[wall_a, wall_b], 0.0005));
    }

    #[test]
    fn single_precision_sat() {
        let a = Obb::<f32>::axis_aligned(Vector3::zeros(), Vector3::repeat(0.5));
        let b = Obb::<f32>::axis_aligned(Vector3::new(0.9, 0.0, 0.0), Vector3::repeat(0.5));
        assert!(obb_intersect(&a, &b, 0.0));
    }
}
