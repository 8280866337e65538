//! Pose-guided reorientation: at most two quarter turns about a horizontal
//! base axis plus a yaw bring any resting block onto any level target; and
//! compilation of a structure plan into per-block action lists.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blocks::{BlockInstance, BlockLibrary, BlockModel};
use crate::calibration::{center_of, rest_on_plane, settle_unchecked};
use crate::collision::{ground_slab, obb_separation, scene_collides};
use crate::config::Config;
use crate::geometry::{
    geodesic_angle, level_rotation, reference_axis, reference_axis_of_rotation, rot_x, rot_y,
    rot_z, symmetry_equivalents, wrap_angle, Axis, SignedAxis,
};
use crate::grasp::{
    approach_tilt, candidate_feasible, preference_key, select_pick_grasp, GraspCandidate,
    GraspSettings, ReachBox,
};
use crate::structure::{resolve_world_poses, StructurePlan};
use crate::{Obb, Pose, SymmetryGroup};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlannerError {
    #[error("blocked insertion: no collision-free insert approach for entry {entry} (`{model}`)")]
    BlockedInsertion { entry: usize, model: String },
    #[error("ungraspable: no feasible {stage} grasp for entry {entry} (`{model}`)")]
    Ungraspable {
        entry: usize,
        model: String,
        stage: String,
    },
    #[error("unassignable: no available `{model}` block for entry {entry}")]
    Unassignable { entry: usize, model: String },
    #[error("no rotation grasp for `{model}` about base {axis:?}")]
    NoRotationGrasp { model: String, axis: Axis },
    #[error("unknown model id `{0}`")]
    UnknownModel(String),
    #[error("entry {0} out of range")]
    EntryOutOfRange(usize),
}

/// One robot primitive. `result` is the noise-free block pose after the
/// action; [`apply_action`] recomputes it from the parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PrimitiveAction {
    PickPlace {
        yaw: f64,
        at: [f64; 2],
        grasp: Option<GraspCandidate>,
        result: Pose,
    },
    RotateHorizontal {
        axis: Axis,
        angle_deg: i32,
        grasp: Option<GraspCandidate>,
        result: Pose,
    },
    YawAlign {
        yaw: f64,
        grasp: Option<GraspCandidate>,
        result: Pose,
    },
    Calibrate {
        plane_height: f64,
        result: Pose,
    },
    Insert {
        target: Pose,
        grasp: GraspCandidate,
        approach_distance: f64,
        result: Pose,
    },
}

impl PrimitiveAction {
    pub fn kind(&self) -> &'static str {
        match self {
            PrimitiveAction::PickPlace { .. } => "pick_place",
            PrimitiveAction::RotateHorizontal { .. } => "rotate_horizontal",
            PrimitiveAction::YawAlign { .. } => "yaw_align",
            PrimitiveAction::Calibrate { .. } => "calibrate",
            PrimitiveAction::Insert { .. } => "insert",
        }
    }

    pub fn result(&self) -> &Pose {
        match self {
            PrimitiveAction::PickPlace { result, .. }
            | PrimitiveAction::RotateHorizontal { result, .. }
            | PrimitiveAction::YawAlign { result, .. }
            | PrimitiveAction::Calibrate { result, .. }
            | PrimitiveAction::Insert { result, .. } => result,
        }
    }

    pub fn grasp(&self) -> Option<&GraspCandidate> {
        match self {
            PrimitiveAction::PickPlace { grasp, .. }
            | PrimitiveAction::RotateHorizontal { grasp, .. }
            | PrimitiveAction::YawAlign { grasp, .. } => grasp.as_ref(),
            PrimitiveAction::Insert { grasp, .. } => Some(grasp),
            PrimitiveAction::Calibrate { .. } => None,
        }
    }
}

/// Rotation of `angle_deg` about a base axis.
pub fn base_rotation(axis: Axis, angle_deg: i32) -> Matrix3<f64> {
    let a = f64::from(angle_deg).to_radians();
    match axis {
        Axis::X => rot_x(a),
        Axis::Y => rot_y(a),
        Axis::Z => rot_z(a),
    }
}

/// Noise-free effect of one action on the block pose.
pub fn apply_action(model: &BlockModel, pose: &Pose, action: &PrimitiveAction, plane_height: f64) -> Pose {
    let level = level_rotation(&pose.rotation);
    let c = center_of(pose, model);
    let here = [c.x, c.y];
    match action {
        PrimitiveAction::PickPlace { yaw, at, .. } => {
            rest_on_plane(model, rot_z(*yaw) * level, *at, plane_height)
        }
        PrimitiveAction::RotateHorizontal { axis, angle_deg, .. } => {
            rest_on_plane(model, base_rotation(*axis, *angle_deg) * level, here, plane_height)
        }
        PrimitiveAction::YawAlign { yaw, .. } => {
            rest_on_plane(model, rot_z(*yaw) * level, here, plane_height)
        }
        PrimitiveAction::Calibrate { plane_height, .. } => settle_unchecked(pose, *plane_height, model),
        PrimitiveAction::Insert { target, .. } => *target,
    }
}

/// Replays actions noise-free from `start`.
pub fn replay(model: &BlockModel, start: &Pose, actions: &[PrimitiveAction], plane_height: f64) -> Pose {
    actions
        .iter()
        .fold(*start, |p, a| apply_action(model, &p, a, plane_height))
}

/// Number of horizontal quarter turns needed: 0 when the reference axes
/// agree, 1 when orthogonal, 2 when opposite.
pub fn rotations_needed(current: &Pose, target: &Pose) -> u8 {
    rotations_between(&current.rotation, &target.rotation)
}

fn rotations_between(current: &Matrix3<f64>, target: &Matrix3<f64>) -> u8 {
    let uc = reference_axis_of_rotation(current);
    let ut = reference_axis_of_rotation(target);
    if uc == ut {
        0
    } else if uc == ut.negate() {
        2
    } else {
        1
    }
}

/// Orientation-only reorientation schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub rotations_needed: u8,
    /// Yaw applied while moving to the rotation workspace.
    pub pick_yaw: f64,
    pub turns: Vec<(Axis, i32)>,
    /// Yaw of the closing yaw alignment.
    pub final_yaw: f64,
}

fn heading(v: &Vector3<f64>) -> f64 {
    v.y.atan2(v.x)
}

/// Computes the schedule; `flip` selects one half turn instead of two
/// quarter turns for opposite reference axes.
pub fn schedule(current: &Matrix3<f64>, target: &Matrix3<f64>, flip: bool) -> Schedule {
    let level = level_rotation(current);
    let uc = reference_axis_of_rotation(current);
    let ut = reference_axis_of_rotation(target);
    let n = rotations_between(current, target);
    let half_pi = std::f64::consts::FRAC_PI_2;
    let (pick_yaw, turns) = match n {
        0 => (0.0, vec![]),
        1 => {
            // Bring the target up-axis onto base ±y, then a quarter turn about x.
            let phi = heading(&(level * ut.unit::<f64>()));
            let to_pos = wrap_angle(half_pi - phi);
            let to_neg = wrap_angle(-half_pi - phi);
            if to_pos.abs() <= to_neg.abs() + 1e-12 {
                (to_pos, vec![(Axis::X, 90)])
            } else {
                (to_neg, vec![(Axis::X, -90)])
            }
        }
        _ => {
            // Align the nearest horizontal object axis with base x.
            let mut best = f64::INFINITY;
            for w in SignedAxis::ALL {
                if w.axis == uc.axis {
                    continue;
                }
                let psi = wrap_angle(-heading(&(level * w.unit::<f64>())));
                if psi.abs() < best.abs() - 1e-12 {
                    best = psi;
                }
            }
            let turns = if flip {
                vec![(Axis::X, 180)]
            } else {
                vec![(Axis::X, 90), (Axis::X, 90)]
            };
            (best, turns)
        }
    };
    let mut r = rot_z(pick_yaw) * level;
    for &(axis, deg) in &turns {
        r = level_rotation(&(base_rotation(axis, deg) * r));
    }
    let m = target * r.transpose();
    Schedule {
        rotations_needed: n,
        pick_yaw,
        turns,
        final_yaw: m[(1, 0)].atan2(m[(0, 0)]),
    }
}

/// Among the symmetry-equivalent targets, the one with the fewest turns,
/// then the smallest closing yaw, then the smallest geodesic distance to the
/// estimate; exact ties keep symmetry-list order.
pub fn choose_canonical_target(estimated: &Pose, target: &Pose, sym: &SymmetryGroup) -> Pose {
    let equivalents = symmetry_equivalents(target, sym);
    let key = |p: &Pose| {
        let s = schedule(&estimated.rotation, &p.rotation, true);
        (
            s.rotations_needed,
            (s.final_yaw.abs() * 1e9).round() as i64,
            (geodesic_angle(&estimated.rotation, &p.rotation) * 1e9).round() as i64,
        )
    };
    let mut best = 0;
    let mut best_key = key(&equivalents[0]);
    for (i, p) in equivalents.iter().enumerate().skip(1) {
        let k = key(p);
        if k < best_key {
            best = i;
            best_key = k;
        }
    }
    equivalents[best]
}

/// Planning parameters derived from a [`Config`].
#[derive(Clone, Debug, PartialEq)]
pub struct PlannerContext {
    pub grasp: GraspSettings,
    pub reach: ReachBox,
    pub plane_height: f64,
    pub workspace: [f64; 2],
    pub approach_distance: f64,
    pub approach_step: f64,
    pub contact_tolerance: f64,
    pub calibration_enabled: bool,
}

impl PlannerContext {
    pub fn from_config(cfg: &Config) -> Self {
        Self {
            grasp: cfg.grasp_settings(),
            reach: cfg.reach(),
            plane_height: cfg.plane_height,
            workspace: cfg.rotation_workspace,
            approach_distance: cfg.insert_approach_distance,
            approach_step: cfg.insert_approach_step,
            contact_tolerance: cfg.contact_tolerance,
            calibration_enabled: cfg.calibration_enabled,
        }
    }

    fn ground(&self) -> Obb {
        ground_slab(self.plane_height)
    }
}

/// Grasp for a turn about a base axis: closure along the turn axis, and
/// feasible both before and after the turn.
fn rotation_grasp(
    model: &BlockModel,
    pose: &Pose,
    axis: Axis,
    angle_deg: i32,
    ctx: &PlannerContext,
) -> Option<(GraspCandidate, Pose)> {
    let after = rest_on_plane(
        model,
        base_rotation(axis, angle_deg) * level_rotation(&pose.rotation),
        {
            let c = center_of(pose, model);
            [c.x, c.y]
        },
        ctx.plane_height,
    );
    let ground = [ctx.ground()];
    let turn_axis = axis.unit::<f64>();
    let candidates = ctx.grasp.candidates(model);
    candidates
        .iter()
        .enumerate()
        .filter(|(_, c)| {
            let closure = pose.rotation * c.gripper_pose_obj.rotation.column(0);
            closure.dot(&turn_axis).abs() > 1.0 - 1e-9
        })
        .filter(|(_, c)| {
            candidate_feasible(c, pose, &ground, &ctx.grasp, &ctx.reach)
                && candidate_feasible(c, &after, &ground, &ctx.grasp, &ctx.reach)
        })
        .min_by_key(|(i, c)| {
            let tilt = approach_tilt(&c.world_pose(pose)).max(approach_tilt(&c.world_pose(&after)));
            (c.offset_index != 0, (tilt * 1e9).round() as i64, *i)
        })
        .map(|(_, c)| (c.clone(), after))
}

fn top_down_grasp(model: &BlockModel, pose: &Pose, ctx: &PlannerContext) -> Option<GraspCandidate> {
    select_pick_grasp(model, pose, &[ctx.ground()], &ctx.grasp, &ctx.reach).ok()
}

fn build_reorientation(
    current: &Pose,
    target: &Pose,
    model: &BlockModel,
    ctx: &PlannerContext,
    flip: bool,
) -> Result<Vec<PrimitiveAction>, PlannerError> {
    let s = schedule(&current.rotation, &target.rotation, flip);
    let mut actions = Vec::new();
    let mut pose = *current;
    if s.rotations_needed > 0 {
        let mut action = PrimitiveAction::PickPlace {
            yaw: s.pick_yaw,
            at: ctx.workspace,
            grasp: None,
            result: Pose::identity(),
        };
        pose = apply_action(model, &pose, &action, ctx.plane_height);
        if let PrimitiveAction::PickPlace { result, .. } = &mut action {
            *result = pose;
        }
        actions.push(action);
    }
    for &(axis, angle_deg) in &s.turns {
        let (grasp, after) = rotation_grasp(model, &pose, axis, angle_deg, ctx).ok_or_else(|| {
            PlannerError::NoRotationGrasp {
                model: model.id.clone(),
                axis,
            }
        })?;
        pose = after;
        actions.push(PrimitiveAction::RotateHorizontal {
            axis,
            angle_deg,
            grasp: Some(grasp),
            result: pose,
        });
    }
    let grasp = top_down_grasp(model, &pose, ctx);
    let mut action = PrimitiveAction::YawAlign {
        yaw: s.final_yaw,
        grasp,
        result: Pose::identity(),
    };
    pose = apply_action(model, &pose, &action, ctx.plane_height);
    if let PrimitiveAction::YawAlign { result, .. } = &mut action {
        *result = pose;
    }
    actions.push(action);
    Ok(actions)
}

/// Actions taking `current` to the orientation of `canonical_target`:
/// an optional move to the rotation workspace with a yaw, up to two turns
/// about base x, then a yaw alignment. A single half turn replaces two
/// quarter turns when a side grasp for it is feasible.
pub fn plan_reorientation(
    current: &Pose,
    canonical_target: &Pose,
    model: &BlockModel,
    ctx: &PlannerContext,
) -> Result<Vec<PrimitiveAction>, PlannerError> {
    if rotations_needed(current, canonical_target) == 2 {
        if let Ok(actions) = build_reorientation(current, canonical_target, model, ctx, true) {
            return Ok(actions);
        }
        return build_reorientation(current, canonical_target, model, ctx, false);
    }
    build_reorientation(current, canonical_target, model, ctx, true)
}

/// Per-block compiled plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockStepPlan {
    pub entry: usize,
    pub model: String,
    pub scene_index: usize,
    pub rotations: u8,
    pub target: Pose,
    pub actions: Vec<PrimitiveAction>,
}

impl BlockStepPlan {
    pub fn rotate_count(&self) -> usize {
        self.actions
            .iter()
            .filter(|a| matches!(a, PrimitiveAction::RotateHorizontal { .. }))
            .count()
    }
}

/// Incremental compiler threading the placement state through the sequence.
pub struct Compiler<'a> {
    plan: &'a StructurePlan,
    library: &'a BlockLibrary,
    ctx: PlannerContext,
    scene: &'a [BlockInstance],
    estimates: Vec<Option<Pose>>,
    in_scene: Vec<bool>,
    world_targets: Vec<Pose>,
    placed: Vec<(String, Pose)>,
}

impl<'a> Compiler<'a> {
    pub fn new(
        plan: &'a StructurePlan,
        library: &'a BlockLibrary,
        scene: &'a [BlockInstance],
        estimates: Vec<Option<Pose>>,
        ctx: PlannerContext,
        anchor: &Pose,
    ) -> Self {
        assert_eq!(scene.len(), estimates.len(), "one estimate slot per scene block");
        // Scene blocks rest on the work plane, so estimates are projected onto it.
        let estimates = scene
            .iter()
            .zip(estimates)
            .map(|(b, e)| match (e, library.get(&b.model_id)) {
                (Some(p), Some(m)) => Some(settle_unchecked(&p, ctx.plane_height, m)),
                (e, _) => e,
            })
            .collect();
        Self {
            plan,
            library,
            ctx,
            scene,
            in_scene: vec![true; scene.len()],
            estimates,
            world_targets: resolve_world_poses(plan, anchor),
            placed: Vec::new(),
        }
    }

    /// Plane-projected estimate the planner uses for scene block `index`.
    pub fn belief(&self, index: usize) -> Option<Pose> {
        self.estimates[index]
    }

    pub fn world_targets(&self) -> &[Pose] {
        &self.world_targets
    }

    pub fn context(&self) -> &PlannerContext {
        &self.ctx
    }

    fn model(&self, id: &str) -> Result<&'a BlockModel, PlannerError> {
        self.library
            .get(id)
            .ok_or_else(|| PlannerError::UnknownModel(id.to_string()))
    }

    /// Detected, unused scene blocks of the entry's model, nearest to the
    /// entry's world target first; ties keep scene order.
    fn assignment_order(&self, entry: usize) -> Vec<usize> {
        let model = &self.plan.entries[entry].model;
        let goal = self.world_targets[entry].translation;
        let mut options: Vec<(f64, usize)> = self
            .scene
            .iter()
            .enumerate()
            .filter(|(i, inst)| self.in_scene[*i] && &inst.model_id == model)
            .filter_map(|(i, _)| self.estimates[i].map(|est| ((est.translation - goal).norm(), i)))
            .collect();
        options.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        options.into_iter().map(|(_, i)| i).collect()
    }

    fn scene_obstacles(&self, except: usize) -> Vec<Obb> {
        let mut out = vec![self.ctx.ground()];
        for (i, inst) in self.scene.iter().enumerate() {
            if i == except || !self.in_scene[i] {
                continue;
            }
            if let (Some(est), Some(m)) = (&self.estimates[i], self.library.get(&inst.model_id)) {
                out.extend(m.obbs(est));
            }
        }
        out
    }

    fn placed_obbs(&self) -> Vec<Obb> {
        self.placed
            .iter()
            .filter_map(|(id, p)| self.library.get(id).map(|m| m.obbs(p)))
            .flatten()
            .collect()
    }

    /// Top-down grasp that reaches the target along a straight vertical line
    /// from `approach_distance` above without touching placed blocks.
    fn insert_grasp(
        &self,
        model: &BlockModel,
        target: &Pose,
        pick_pose: Option<&Pose>,
    ) -> Option<GraspCandidate> {
        let ctx = &self.ctx;
        let placed = self.placed_obbs();
        let mut obstacles = placed.clone();
        obstacles.push(ctx.ground());
        let ground = [ctx.ground()];
        let up = reference_axis(target);
        let lift = target.rotation * up.unit::<f64>();
        let steps = (ctx.approach_distance / ctx.approach_step).ceil().max(1.0) as usize;
        let mut candidates: Vec<(usize, GraspCandidate)> = ctx
            .grasp
            .candidates(model)
            .into_iter()
            .enumerate()
            .filter(|(_, c)| c.approach == up)
            .collect();
        candidates.sort_by_key(|(i, c)| preference_key(c, target, *i));
        candidates.into_iter().map(|(_, c)| c).find(|c| {
            if let Some(p) = pick_pose {
                if !candidate_feasible(c, p, &ground, &ctx.grasp, &ctx.reach) {
                    return false;
                }
            }
            (0..=steps).all(|k| {
                let h = ctx.approach_distance * (1.0 - k as f64 / steps as f64);
                let pose = Pose::from_parts_unchecked(target.rotation, target.translation + lift * h);
                if !candidate_feasible(c, &pose, &obstacles, &ctx.grasp, &ctx.reach) {
                    return false;
                }
                model.obbs(&pose).iter().all(|b| {
                    placed
                        .iter()
                        .all(|o| obb_separation(b, o) >= -ctx.contact_tolerance)
                })
            })
        })
    }

    /// Plans one entry and commits it to the placement state on success.
    /// Blocks are tried nearest first; a block without a feasible pick grasp
    /// hands over to the next candidate of the same model.
    pub fn step(&mut self, entry: usize) -> Result<BlockStepPlan, PlannerError> {
        if entry >= self.plan.entries.len() {
            return Err(PlannerError::EntryOutOfRange(entry));
        }
        let model_id = self.plan.entries[entry].model.clone();
        self.model(&model_id)?;
        let mut first_error = None;
        for scene_index in self.assignment_order(entry) {
            match self.plan_block(entry, scene_index) {
                Ok(plan) => {
                    self.in_scene[scene_index] = false;
                    self.placed.push((model_id, plan.target));
                    return Ok(plan);
                }
                Err(e @ PlannerError::Ungraspable { .. }) => {
                    first_error.get_or_insert(e);
                }
                Err(e) => return Err(e),
            }
        }
        Err(first_error.unwrap_or(PlannerError::Unassignable { entry, model: model_id }))
    }

    fn plan_block(&self, entry: usize, scene_index: usize) -> Result<BlockStepPlan, PlannerError> {
        let model_id = self.plan.entries[entry].model.clone();
        let model = self.model(&model_id)?;
        let estimate = self.estimates[scene_index].expect("assigned blocks are detected");
        let target = choose_canonical_target(&estimate, &self.world_targets[entry], &model.symmetry);
        let ctx = self.ctx.clone();
        let ungraspable = |stage: &str| PlannerError::Ungraspable {
            entry,
            model: model_id.clone(),
            stage: stage.to_string(),
        };
        let blocked = || PlannerError::BlockedInsertion {
            entry,
            model: model_id.clone(),
        };

        let mut actions = Vec::new();
        let rotations = rotations_needed(&estimate, &target);
        let at_target = estimate.approx_eq(&target, 1e-9);
        let insert_from = if at_target {
            None
        } else {
            let pick = select_pick_grasp(
                model,
                &estimate,
                &self.scene_obstacles(scene_index),
                &ctx.grasp,
                &ctx.reach,
            )
            .map_err(|_| ungraspable("pick"))?;
            let mut reorient = if rotations == 0 {
                let to_ws = PrimitiveAction::PickPlace {
                    yaw: 0.0,
                    at: ctx.workspace,
                    grasp: Some(pick),
                    result: Pose::identity(),
                };
                let ws = apply_action(model, &estimate, &to_ws, ctx.plane_height);
                let to_ws = match to_ws {
                    PrimitiveAction::PickPlace { yaw, at, grasp, .. } => PrimitiveAction::PickPlace {
                        yaw,
                        at,
                        grasp,
                        result: ws,
                    },
                    _ => unreachable!(),
                };
                let mut rest = plan_reorientation(&ws, &target, model, &ctx)?;
                rest.insert(0, to_ws);
                rest
            } else {
                let mut r = plan_reorientation(&estimate, &target, model, &ctx)?;
                if let Some(PrimitiveAction::PickPlace { grasp, .. }) = r.first_mut() {
                    *grasp = Some(pick);
                }
                r
            };
            if reorient
                .iter()
                .any(|a| matches!(a, PrimitiveAction::YawAlign { grasp: None, .. }))
            {
                return Err(ungraspable("yaw alignment"));
            }
            let ws_pose = *reorient.last().expect("non-empty").result();
            actions.append(&mut reorient);
            Some(ws_pose)
        };
        let here = insert_from.unwrap_or(estimate);
        if ctx.calibration_enabled {
            let bottom = model
                .bbox_corners(&here)
                .iter()
                .map(|c| c.z)
                .fold(f64::INFINITY, f64::min);
            actions.push(PrimitiveAction::Calibrate {
                plane_height: bottom,
                result: settle_unchecked(&here, bottom, model),
            });
        }
        let grasp = self
            .insert_grasp(model, &target, insert_from.as_ref())
            .ok_or_else(blocked)?;
        actions.push(PrimitiveAction::Insert {
            target,
            grasp,
            approach_distance: ctx.approach_distance,
            result: target,
        });

        Ok(BlockStepPlan {
            entry,
            model: model_id,
            scene_index,
            rotations,
            target,
            actions,
        })
    }
}

/// Compiles every entry in sequence order; stops at the first failure.
pub fn compile_assembly(
    plan: &StructurePlan,
    library: &BlockLibrary,
    scene: &[BlockInstance],
    estimates: &[Option<Pose>],
    ctx: &PlannerContext,
    anchor: &Pose,
) -> Result<Vec<BlockStepPlan>, PlannerError> {
    let mut compiler = Compiler::new(plan, library, scene, estimates.to_vec(), ctx.clone(), anchor);
    plan.sequence.iter().map(|&e| compiler.step(e)).collect()
}

/// Moves an obstacle list by `offset`; used by collision checks along
/// straight-line motions.
pub fn shifted(obbs: &[Obb], offset: Vector3<f64>) -> Vec<Obb> {
    let t = Pose::from_translation(offset);
    obbs.iter().map(|o| o.transformed(&t)).collect()
}

/// Whether any of `moving` hits `obstacles` at `margin`.
pub fn any_collision(moving: &[Obb], obstacles: &[Obb], margin: f64) -> bool {
    scene_collides(moving, obstacles, margin)
}
