//! Geometric and algorithmic core of an RGB-driven 6D block-assembly system.
//!
//! The math kernels ([`geometry`], [`collision`], [`metrics`]) are generic over
//! the scalar type; the planning and simulation layers work in `f64` through
//! the aliases below.

pub mod blocks;
pub mod calibration;
pub mod collision;
pub mod config;
pub mod geometry;
pub mod grasp;
pub mod metrics;
pub mod planner;
pub mod scalar;
pub mod simulation;
pub mod structure;

pub use scalar::Real;

pub type Pose = geometry::Pose<f64>;
pub type Pose32 = geometry::Pose<f32>;
pub type SymmetryGroup = geometry::SymmetryGroup<f64>;
pub type Obb = collision::Obb<f64>;
pub type Obb32 = collision::Obb<f32>;
