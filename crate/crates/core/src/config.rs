//! Run configuration shared by the planner, the simulator and the CLI.
//!
//! The file form is a flat JSON object; every field has a default and
//! unknown keys are rejected.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blocks::BlockModel;
use crate::collision::GripperModel;
use crate::geometry::{reference_axis, rot_z};
use crate::grasp::{GraspSettings, ReachBox};
use crate::simulation::{GraspCapture, NoiseModel};
use crate::Pose;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported format_version {0} (expected 1)")]
    Version(u32),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub format_version: u32,

    // Gripper proxy.
    pub finger_half_extents: [f64; 3],
    pub max_opening: f64,
    pub tip_depth: f64,

    // Grasp candidates and collision filtering.
    pub grasp_offset_fraction: f64,
    pub grasp_clearance: f64,
    pub collision_margin: f64,
    pub contact_tolerance: f64,
    pub reach_min: [f64; 3],
    pub reach_max: [f64; 3],
    pub reach_max_tilt_deg: f64,

    // Work cell layout.
    pub plane_height: f64,
    pub rotation_workspace: [f64; 2],
    pub anchor_position: [f64; 2],
    pub anchor_yaw_deg: f64,
    pub insert_approach_distance: f64,
    pub insert_approach_step: f64,

    // Scene generation.
    pub scene_center: [f64; 2],
    pub scene_half_size: f64,
    pub scene_clearance: f64,
    pub scene_max_attempts: usize,
    pub scene_require_pickable: bool,

    // Perception noise.
    pub rot_sigma: f64,
    pub trans_sigma: f64,
    pub gross_error_prob: f64,
    pub detection_prob: f64,

    // Execution model.
    pub calibration_enabled: bool,
    pub actuation_noise: f64,
    pub settle_max_tilt: f64,
    pub assembly_tolerance: f64,
    pub wreck_depth: f64,
    pub grasp_capture: GraspCapture,
    pub min_finger_overlap: f64,

    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        let gripper = GripperModel::default();
        let noise = NoiseModel::default();
        Self {
            format_version: FORMAT_VERSION,
            finger_half_extents: gripper.finger_half_extents.into(),
            max_opening: gripper.max_opening,
            tip_depth: gripper.tip_depth,
            grasp_offset_fraction: 0.25,
            grasp_clearance: 0.004,
            collision_margin: 0.0005,
            contact_tolerance: 1e-6,
            reach_min: [-0.4, -0.6, -0.05],
            reach_max: [0.8, 0.6, 0.6],
            reach_max_tilt_deg: 100.0,
            plane_height: 0.0,
            rotation_workspace: [0.0, -0.3],
            anchor_position: [0.35, 0.0],
            anchor_yaw_deg: 0.0,
            insert_approach_distance: 0.05,
            insert_approach_step: 0.001,
            scene_center: [0.0, 0.0],
            scene_half_size: 0.15,
            scene_clearance: 0.002,
            scene_max_attempts: 1000,
            scene_require_pickable: true,
            rot_sigma: noise.rot_sigma,
            trans_sigma: noise.trans_sigma,
            gross_error_prob: noise.gross_error_prob,
            detection_prob: noise.detection_prob,
            calibration_enabled: true,
            actuation_noise: 5e-5,
            settle_max_tilt: 0.2,
            assembly_tolerance: 0.001,
            wreck_depth: 0.001,
            grasp_capture: GraspCapture::default(),
            min_finger_overlap: 0.005,
            seed: 0,
        }
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Config = serde_json::from_str(text)?;
        if cfg.format_version != FORMAT_VERSION {
            return Err(ConfigError::Version(cfg.format_version));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: &str| Err(ConfigError::Invalid(msg.to_string()));
        if self.finger_half_extents.iter().any(|&h| h <= 0.0) {
            return bad("finger_half_extents must be positive");
        }
        if self.max_opening <= 0.0 {
            return bad("max_opening must be positive");
        }
        if self.rot_sigma < 0.0 || self.trans_sigma < 0.0 {
            return bad("noise sigmas must be non-negative");
        }
        for p in [self.gross_error_prob, self.detection_prob] {
            if !(0.0..=1.0).contains(&p) {
                return bad("probabilities must lie in [0, 1]");
            }
        }
        if self.collision_margin < 0.0 || self.actuation_noise < 0.0 {
            return bad("margins and actuation noise must be non-negative");
        }
        if self.insert_approach_step <= 0.0 {
            return bad("insert_approach_step must be positive");
        }
        if self.scene_half_size <= 0.0 {
            return bad("scene_half_size must be positive");
        }
        Ok(())
    }

    pub fn gripper(&self) -> GripperModel {
        GripperModel {
            finger_half_extents: Vector3::from(self.finger_half_extents),
            max_opening: self.max_opening,
            tip_depth: self.tip_depth,
        }
    }

    pub fn grasp_settings(&self) -> GraspSettings {
        GraspSettings {
            gripper: self.gripper(),
            offset_fraction: self.grasp_offset_fraction,
            clearance: self.grasp_clearance,
            margin: self.collision_margin,
        }
    }

    pub fn reach(&self) -> ReachBox {
        ReachBox {
            min: self.reach_min,
            max: self.reach_max,
            max_tilt: self.reach_max_tilt_deg.to_radians(),
        }
    }

    pub fn noise(&self) -> NoiseModel {
        NoiseModel {
            rot_sigma: self.rot_sigma,
            trans_sigma: self.trans_sigma,
            gross_error_prob: self.gross_error_prob,
            detection_prob: self.detection_prob,
        }
    }

    pub fn set_noise(&mut self, noise: &NoiseModel) {
        self.rot_sigma = noise.rot_sigma;
        self.trans_sigma = noise.trans_sigma;
        self.gross_error_prob = noise.gross_error_prob;
        self.detection_prob = noise.detection_prob;
    }

    /// World pose of the structure's anchor block, resting on the work plane.
    pub fn anchor_pose(&self, anchor: &BlockModel) -> Pose {
        let rotation = rot_z(self.anchor_yaw_deg.to_radians());
        let up = reference_axis(&Pose::from_rotation(rotation));
        let z = self.plane_height + anchor.resting_height(up);
        Pose::from_parts_unchecked(
            rotation,
            Vector3::new(self.anchor_position[0], self.anchor_position[1], z),
        )
    }
}
