//! Seeded Monte Carlo harness: scene generation, a noisy perception oracle,
//! kinematic execution of compiled plans on a simulated true state, and
//! batch statistics.

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blocks::{BlockInstance, BlockLibrary, BlockModel};
use crate::calibration::{calibrate, center_of, rest_on_plane, settle_unchecked, CalibrationSettings, SqueezeSettings};
use crate::collision::{ground_slab, penetration_depth, scene_collides};
use crate::config::{Config, FORMAT_VERSION};
use crate::geometry::{axis_angle, level_reference, rot_z, rotation_from_uniforms, symmetry_equivalents};
use crate::grasp::{select_pick_grasp, GraspCandidate};
use crate::metrics::{ncm_ndeg, translation_error};
use crate::planner::{Compiler, PlannerContext, PrimitiveAction};
use crate::structure::StructurePlan;
use crate::{Obb, Pose};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("scene too crowded: could not place block {index} (`{model}`) within {attempts} attempts")]
    SceneTooCrowded {
        index: usize,
        model: String,
        attempts: usize,
    },
    #[error("unknown model id `{0}`")]
    UnknownModel(String),
}

/// Perception noise. Translation noise is isotropic Gaussian; rotation noise
/// is a rotation about a uniformly random axis by a Gaussian angle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub rot_sigma: f64,
    pub trans_sigma: f64,
    /// Probability that an estimate is replaced by a random orientation and
    /// an offset of up to 5 cm.
    pub gross_error_prob: f64,
    pub detection_prob: f64,
}

/// Offset radius of a gross perception error.
pub const GROSS_OFFSET_RADIUS: f64 = 0.05;

impl NoiseModel {
    pub fn zero() -> Self {
        Self {
            rot_sigma: 0.0,
            trans_sigma: 0.0,
            gross_error_prob: 0.0,
            detection_prob: 1.0,
        }
    }
}

impl Default for NoiseModel {
    /// Result of [`calibrate_noise`] with [`NoiseCalibrationTarget::default`]
    /// and seed 0, frozen.
    fn default() -> Self {
        Self {
            rot_sigma: 0.068_801_164_854_027_65,
            trans_sigma: 0.007_609_310_880_009_886,
            gross_error_prob: 0.02,
            detection_prob: 1.0,
        }
    }
}

/// When a planned grasp still captures the block at its true pose.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraspCapture {
    /// Jaws must close around the true block, fingers must overlap its
    /// across-width, and the fingertips must reach past its near face by at
    /// least `min_finger_overlap`.
    #[default]
    GripperGeometry,
    /// In-plane offset of the block center at most `fraction` of the block
    /// diameter.
    DiameterFraction { fraction: f64 },
}

/// Random draws for one perception event, kept separate from the sigmas so
/// the same draws can be rescaled.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseDraw {
    pub detected: bool,
    pub gross: Option<(Matrix3<f64>, Vector3<f64>)>,
    pub rot_axis: Vector3<f64>,
    pub rot_normal: f64,
    pub trans_normal: Vector3<f64>,
}

fn unit_vector<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        );
        let n = v.norm();
        if n > 1e-9 {
            return v / n;
        }
    }
}

impl NoiseDraw {
    pub fn sample<R: Rng + ?Sized>(noise: &NoiseModel, rng: &mut R) -> Self {
        let detected = rng.random::<f64>() < noise.detection_prob;
        let gross_roll = rng.random::<f64>();
        let gross_rotation = rotation_from_uniforms(rng.random(), rng.random(), rng.random());
        let gross_offset = unit_vector(rng) * GROSS_OFFSET_RADIUS * rng.random::<f64>().cbrt();
        let rot_axis = unit_vector(rng);
        let rot_normal = rng.sample(StandardNormal);
        let trans_normal = Vector3::new(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        Self {
            detected,
            gross: (gross_roll < noise.gross_error_prob).then_some((gross_rotation, gross_offset)),
            rot_axis,
            rot_normal,
            trans_normal,
        }
    }

    pub fn apply(&self, truth: &Pose, noise: &NoiseModel) -> Option<Pose> {
        if !self.detected {
            return None;
        }
        Some(match self.gross {
            Some((rotation, offset)) => Pose::from_parts_unchecked(rotation, truth.translation + offset),
            None => Pose::from_parts_unchecked(
                axis_angle(&self.rot_axis, noise.rot_sigma * self.rot_normal) * truth.rotation,
                truth.translation + self.trans_normal * noise.trans_sigma,
            ),
        })
    }
}

/// One perception event per block; `None` marks a missed detection.
pub fn perceive_with<R: Rng + ?Sized>(scene: &[BlockInstance], noise: &NoiseModel, rng: &mut R) -> Vec<Option<Pose>> {
    scene
        .iter()
        .map(|b| NoiseDraw::sample(noise, rng).apply(&b.pose, noise))
        .collect()
}

pub fn perceive(scene: &[BlockInstance], noise: &NoiseModel, seed: u64) -> Vec<Option<Pose>> {
    perceive_with(scene, noise, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Scene generation parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneSettings {
    pub center: [f64; 2],
    pub half_size: f64,
    pub clearance: f64,
    pub max_attempts: usize,
    pub plane_height: f64,
    /// Reject placements that leave some block without a feasible top-down grasp.
    pub require_pickable: Option<PlannerContext>,
}

impl SceneSettings {
    pub fn from_config(cfg: &Config) -> Self {
        Self {
            center: cfg.scene_center,
            half_size: cfg.scene_half_size,
            clearance: cfg.scene_clearance,
            max_attempts: cfg.scene_max_attempts,
            plane_height: cfg.plane_height,
            require_pickable: cfg.scene_require_pickable.then(|| PlannerContext::from_config(cfg)),
        }
    }
}

/// Random stable resting pose with its bounding-box center at `xy`.
pub fn random_resting_pose<R: Rng + ?Sized>(model: &BlockModel, xy: [f64; 2], plane_height: f64, rng: &mut R) -> Pose {
    let faces = model.stable_faces();
    let up = faces[rng.random_range(0..faces.len())];
    let yaw = (rng.random::<f64>() * 2.0 - 1.0) * std::f64::consts::PI;
    rest_on_plane(model, rot_z(yaw) * level_reference::<f64>(up), xy, plane_height)
}

fn pickable(model: &BlockModel, pose: &Pose, obstacles: &[Obb], ctx: &PlannerContext) -> bool {
    select_pick_grasp(model, pose, obstacles, &ctx.grasp, &ctx.reach).is_ok()
}

/// Places the blocks one by one with rejection sampling.
pub fn generate_scene<R: Rng + ?Sized>(
    library: &BlockLibrary,
    models: &[String],
    settings: &SceneSettings,
    rng: &mut R,
) -> Result<Vec<BlockInstance>, SimError> {
    let mut placed: Vec<(BlockInstance, Vec<Obb>)> = Vec::with_capacity(models.len());
    let ground = ground_slab(settings.plane_height);
    for (index, id) in models.iter().enumerate() {
        let model = library.get(id).ok_or_else(|| SimError::UnknownModel(id.clone()))?;
        let mut accepted = None;
        for _ in 0..settings.max_attempts {
            let xy = [
                settings.center[0] + (rng.random::<f64>() * 2.0 - 1.0) * settings.half_size,
                settings.center[1] + (rng.random::<f64>() * 2.0 - 1.0) * settings.half_size,
            ];
            let pose = random_resting_pose(model, xy, settings.plane_height, rng);
            let obbs = model.obbs(&pose);
            if placed
                .iter()
                .any(|(_, other)| scene_collides(&obbs, other, settings.clearance))
            {
                continue;
            }
            if let Some(ctx) = &settings.require_pickable {
                let mut all: Vec<(&BlockModel, Pose, &[Obb])> = placed
                    .iter()
                    .map(|(b, o)| (library.get(&b.model_id).expect("placed models exist"), b.pose, o.as_slice()))
                    .collect();
                all.push((model, pose, obbs.as_slice()));
                let ok = (0..all.len()).all(|i| {
                    let mut obstacles = vec![ground];
                    for (j, entry) in all.iter().enumerate() {
                        if j != i {
                            obstacles.extend_from_slice(entry.2);
                        }
                    }
                    pickable(all[i].0, &all[i].1, &obstacles, ctx)
                });
                if !ok {
                    continue;
                }
            }
            accepted = Some((BlockInstance { model_id: id.clone(), pose }, obbs));
            break;
        }
        match accepted {
            Some(a) => placed.push(a),
            None => {
                return Err(SimError::SceneTooCrowded {
                    index,
                    model: id.clone(),
                    attempts: settings.max_attempts,
                })
            }
        }
    }
    Ok(placed.into_iter().map(|(b, _)| b).collect())
}

/// Sigma search targets: the mean-row recalls at 2 cm and at 5°5cm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseCalibrationTarget {
    pub recall_2cm: f64,
    pub recall_5deg5cm: f64,
    pub gross_error_prob: f64,
    pub samples: usize,
}

impl Default for NoiseCalibrationTarget {
    fn default() -> Self {
        Self {
            recall_2cm: 0.9071,
            recall_5deg5cm: 0.7763,
            gross_error_prob: 0.02,
            samples: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseCalibration {
    pub noise: NoiseModel,
    pub recall_2cm: f64,
    pub recall_5deg5cm: f64,
}

/// Fixed perception sample set: per sample the object, its true resting pose
/// and the random draws.
pub struct PerceptionSamples<'a> {
    library: &'a BlockLibrary,
    items: Vec<(usize, Pose, NoiseDraw)>,
}

impl<'a> PerceptionSamples<'a> {
    pub fn new(library: &'a BlockLibrary, samples: usize, gross_error_prob: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = NoiseModel {
            gross_error_prob,
            ..NoiseModel::zero()
        };
        let items = (0..samples)
            .map(|i| {
                let m = i % library.len();
                let xy = [rng.random::<f64>() * 0.3 - 0.15, rng.random::<f64>() * 0.3 - 0.15];
                let truth = random_resting_pose(&library.models()[m], xy, 0.0, &mut rng);
                (m, truth, NoiseDraw::sample(&shape, &mut rng))
            })
            .collect();
        Self { library, items }
    }

    /// Pose records for `noise`; undetected samples are dropped.
    pub fn records(&self, noise: &NoiseModel) -> Vec<crate::metrics::PoseRecord> {
        self.items
            .iter()
            .filter_map(|(m, truth, draw)| {
                draw.apply(truth, noise).map(|est| crate::metrics::PoseRecord {
                    object: self.library.models()[*m].id.clone(),
                    estimated: est,
                    ground_truth: *truth,
                })
            })
            .collect()
    }

    /// Mean-row recalls at 2 cm and 5°5cm, computed without the ADD columns.
    pub fn recalls(&self, noise: &NoiseModel) -> (f64, f64) {
        let n = self.library.len();
        let mut hits = vec![(0usize, 0usize, 0usize); n];
        for (m, truth, draw) in &self.items {
            let Some(est) = draw.apply(truth, noise) else { continue };
            let sym = &self.library.models()[*m].symmetry;
            let h = &mut hits[*m];
            h.0 += 1;
            h.1 += usize::from(translation_error(&est, truth, sym) <= 0.02);
            h.2 += usize::from(ncm_ndeg(&est, truth, sym, 5.0, 5.0));
        }
        let rows: Vec<_> = hits.iter().filter(|h| h.0 > 0).collect();
        let mean = |f: &dyn Fn(&(usize, usize, usize)) -> usize| {
            rows.iter().map(|h| f(h) as f64 / h.0 as f64).sum::<f64>() / rows.len() as f64
        };
        (mean(&|h| h.1), mean(&|h| h.2))
    }
}

fn bisect(mut lo: f64, mut hi: f64, target: f64, recall: impl Fn(f64) -> f64) -> f64 {
    // `recall` is non-increasing in sigma.
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if recall(mid) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Binary search for the sigmas: translation against the 2 cm recall, then
/// rotation against the 5°5cm recall, over a fixed sample set.
pub fn calibrate_noise(library: &BlockLibrary, target: &NoiseCalibrationTarget, seed: u64) -> NoiseCalibration {
    let samples = PerceptionSamples::new(library, target.samples, target.gross_error_prob, seed);
    let mut noise = NoiseModel {
        rot_sigma: 0.0,
        trans_sigma: 0.0,
        gross_error_prob: target.gross_error_prob,
        detection_prob: 1.0,
    };
    noise.trans_sigma = bisect(0.0, 0.1, target.recall_2cm, |s| {
        samples.recalls(&NoiseModel { trans_sigma: s, ..noise.clone() }).0
    });
    noise.rot_sigma = bisect(0.0, 1.0, target.recall_5deg5cm, |s| {
        samples.recalls(&NoiseModel { rot_sigma: s, ..noise.clone() }).1
    });
    let (recall_2cm, recall_5deg5cm) = samples.recalls(&noise);
    NoiseCalibration {
        noise,
        recall_2cm,
        recall_5deg5cm,
    }
}

/// Outcome of one plan step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub entry: usize,
    pub model: String,
    pub detected: bool,
    pub grasp_ok: bool,
    pub rotations: u8,
    pub calibrated: bool,
    pub gap: Option<f64>,
    pub collision_depth: Option<f64>,
    pub final_error: Option<f64>,
    pub failure: Option<String>,
    pub success: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub structure: String,
    pub seed: u64,
    pub blocks: usize,
    pub detected: usize,
    pub steps: Vec<StepReport>,
    pub error: Option<String>,
    pub success: bool,
}

/// Whether the grasp planned for a block believed at `belief` still holds
/// the block at `truth`.
pub fn grasp_captures(
    grasp: &GraspCandidate,
    model: &BlockModel,
    belief: &Pose,
    truth: &Pose,
    cfg: &Config,
) -> bool {
    let gripper = grasp.world_pose(belief);
    let inv = gripper.inverse();
    let delta = inv.transform_point(&center_of(truth, model));
    match &cfg.grasp_capture {
        GraspCapture::DiameterFraction { fraction } => {
            let planned = inv.transform_point(&center_of(belief, model));
            let d = delta - planned;
            d.x.hypot(d.y) <= fraction * model.diameter
        }
        GraspCapture::GripperGeometry => {
            let half = (model.bbox_max() - model.bbox_min()) / 2.0;
            let rel = inv.rotation * truth.rotation;
            let proj = rel.abs() * half;
            delta.x.abs() + proj.x <= cfg.max_opening / 2.0
                && delta.y.abs() <= proj.y
                && delta.z - proj.z <= cfg.tip_depth - cfg.min_finger_overlap
        }
    }
}

/// Largest in-plane and 3D corner displacement between `pose` and the
/// closest symmetry-equivalent description of `target`.
pub fn placement_error(model: &BlockModel, pose: &Pose, target: &Pose) -> (f64, f64) {
    let corners = model.bbox_corners(pose);
    let mut best = (f64::INFINITY, f64::INFINITY);
    for t in symmetry_equivalents(target, &model.symmetry) {
        let goal = model.bbox_corners(&t);
        let (mut plane, mut full) = (0.0f64, 0.0f64);
        for (a, b) in corners.iter().zip(goal.iter()) {
            let d = a - b;
            plane = plane.max(d.x.hypot(d.y));
            full = full.max(d.norm());
        }
        best.0 = best.0.min(plane);
        best.1 = best.1.min(full);
    }
    best
}

fn settings_of(cfg: &Config) -> CalibrationSettings {
    CalibrationSettings {
        squeeze: SqueezeSettings {
            max_opening: cfg.max_opening,
            actuation_noise: cfg.actuation_noise,
        },
        max_tilt: cfg.settle_max_tilt,
    }
}

/// Runs one trial on a given scene and perception result.
pub fn run_trial_on<R: Rng + ?Sized>(
    plan: &StructurePlan,
    library: &BlockLibrary,
    cfg: &Config,
    scene: &[BlockInstance],
    estimates: Vec<Option<Pose>>,
    seed: u64,
    rng: &mut R,
) -> TrialReport {
    let ctx = PlannerContext::from_config(cfg);
    let detected_count = estimates.iter().filter(|e| e.is_some()).count();
    let anchor_model = library.get(&plan.entries[0].model);
    let Some(anchor_model) = anchor_model else {
        return TrialReport {
            structure: plan.name.clone(),
            seed,
            blocks: scene.len(),
            detected: detected_count,
            steps: vec![],
            error: Some(format!("unknown model id `{}`", plan.entries[0].model)),
            success: false,
        };
    };
    let anchor = cfg.anchor_pose(anchor_model);
    let mut compiler = Compiler::new(plan, library, scene, estimates.clone(), ctx.clone(), &anchor);
    let calibration = settings_of(cfg);
    let mut truth: Vec<Pose> = scene.iter().map(|b| b.pose).collect();
    let mut placed: Vec<Obb> = Vec::new();
    let mut wrecked = false;
    let mut steps = Vec::with_capacity(plan.sequence.len());

    for &entry in &plan.sequence {
        let model_id = plan.entries[entry].model.clone();
        let mut step = StepReport {
            entry,
            model: model_id.clone(),
            detected: false,
            grasp_ok: false,
            rotations: 0,
            calibrated: false,
            gap: None,
            collision_depth: None,
            final_error: None,
            failure: None,
            success: false,
        };
        if wrecked {
            step.failure = Some("structure wrecked by an earlier step".into());
            steps.push(step);
            continue;
        }
        let block_plan = match compiler.step(entry) {
            Ok(p) => p,
            Err(e) => {
                step.detected = scene
                    .iter()
                    .zip(&estimates)
                    .any(|(b, e)| b.model_id == model_id && e.is_some());
                step.failure = Some(e.to_string());
                steps.push(step);
                continue;
            }
        };
        let model = library.get(&model_id).expect("compiled models exist");
        let i = block_plan.scene_index;
        step.detected = true;
        step.rotations = block_plan.rotations;
        let mut belief = compiler.belief(i).expect("assigned blocks are detected");
        let mut t = truth[i];
        let mut grasp_ok = true;
        for action in &block_plan.actions {
            if let Some(g) = action.grasp() {
                if !grasp_captures(g, model, &belief, &t, cfg) {
                    grasp_ok = false;
                    step.failure = Some(format!("grasp failure during {}", action.kind()));
                    break;
                }
            }
            match action {
                PrimitiveAction::Calibrate { plane_height, result } => {
                    match calibrate(&t, &belief, model, *plane_height, &calibration, rng) {
                        Ok(p) => t = p,
                        Err(e) => {
                            step.failure = Some(format!("calibration error: {e}"));
                            // The squeeze still closes on the block; carry on without it.
                            t = settle_unchecked(&t, *plane_height, model);
                        }
                    }
                    step.calibrated = true;
                    belief = *result;
                }
                PrimitiveAction::Insert { target, .. } => {
                    t = target.compose(&belief.inverse()).compose(&t);
                    belief = *target;
                }
                other => {
                    let next = *other.result();
                    t = settle_unchecked(&next.compose(&belief.inverse()).compose(&t), ctx.plane_height, model);
                    belief = next;
                }
            }
        }
        step.grasp_ok = grasp_ok;
        truth[i] = t;
        if grasp_ok {
            let (gap, final_error) = placement_error(model, &t, &block_plan.target);
            let obbs = model.obbs(&t);
            let depth = obbs
                .iter()
                .flat_map(|a| placed.iter().map(move |b| penetration_depth(a, b)))
                .fold(0.0f64, f64::max);
            step.gap = Some(gap);
            step.final_error = Some(final_error);
            step.collision_depth = Some(depth);
            step.success = step.failure.is_none()
                && gap < cfg.assembly_tolerance
                && depth < cfg.assembly_tolerance;
            if !step.success && step.failure.is_none() {
                step.failure = Some(if depth >= cfg.assembly_tolerance {
                    format!("insertion collision depth {:.4} m", depth)
                } else {
                    format!("insertion gap {:.4} m", gap)
                });
            }
            if depth > cfg.wreck_depth {
                wrecked = true;
            }
            placed.extend(obbs);
        }
        steps.push(step);
    }
    let success = !steps.is_empty() && steps.iter().all(|s| s.success);
    TrialReport {
        structure: plan.name.clone(),
        seed,
        blocks: scene.len(),
        detected: detected_count,
        steps,
        error: None,
        success,
    }
}

/// One seeded trial: scene, one perception pass, execution.
pub fn run_trial(plan: &StructurePlan, library: &BlockLibrary, cfg: &Config, seed: u64) -> TrialReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let models: Vec<String> = plan.entries.iter().map(|e| e.model.clone()).collect();
    match generate_scene(library, &models, &SceneSettings::from_config(cfg), &mut rng) {
        Ok(scene) => {
            let estimates = perceive_with(&scene, &cfg.noise(), &mut rng);
            run_trial_on(plan, library, cfg, &scene, estimates, seed, &mut rng)
        }
        Err(e) => TrialReport {
            structure: plan.name.clone(),
            seed,
            blocks: models.len(),
            detected: 0,
            steps: vec![],
            error: Some(e.to_string()),
            success: false,
        },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureStats {
    pub structure: String,
    pub blocks: usize,
    pub trials: usize,
    pub detection_rate: f64,
    pub step_rate: f64,
    pub trial_rate: f64,
}

impl StructureStats {
    pub fn from_reports(structure: &str, blocks: usize, reports: &[TrialReport]) -> Self {
        let total_blocks: usize = reports.iter().map(|r| r.blocks).sum();
        let detected: usize = reports.iter().map(|r| r.detected).sum();
        let steps: usize = reports.iter().map(|r| r.blocks).sum();
        let good_steps: usize = reports
            .iter()
            .map(|r| r.steps.iter().filter(|s| s.success).count())
            .sum();
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        Self {
            structure: structure.to_string(),
            blocks,
            trials: reports.len(),
            detection_rate: ratio(detected, total_blocks),
            step_rate: ratio(good_steps, steps),
            trial_rate: ratio(reports.iter().filter(|r| r.success).count(), reports.len()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    pub structures: Vec<StructureStats>,
    pub mean: StructureStats,
    pub trials: usize,
}

impl BatchStats {
    pub fn from_rows(structures: Vec<StructureStats>) -> Self {
        let n = structures.len().max(1) as f64;
        let avg = |f: fn(&StructureStats) -> f64| structures.iter().map(f).sum::<f64>() / n;
        let trials = structures.iter().map(|s| s.trials).sum();
        let mean = StructureStats {
            structure: "mean".into(),
            blocks: structures.iter().map(|s| s.blocks).sum(),
            trials,
            detection_rate: avg(|s| s.detection_rate),
            step_rate: avg(|s| s.step_rate),
            trial_rate: avg(|s| s.trial_rate),
        };
        Self {
            structures,
            mean,
            trials,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("structure,blocks,trials,detection_rate,step_rate,trial_rate\n");
        for s in self.structures.iter().chain(std::iter::once(&self.mean)) {
            out.push_str(&format!(
                "{},{},{},{:.4},{:.4},{:.4}\n",
                s.structure, s.blocks, s.trials, s.detection_rate, s.step_rate, s.trial_rate
            ));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub format_version: u32,
    pub base_seed: u64,
    pub calibration_enabled: bool,
    pub noise: NoiseModel,
    pub stats: BatchStats,
    pub trials: Vec<TrialReport>,
}

impl BatchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs `trials` seeded trials per plan with seeds `base_seed..base_seed + trials`.
/// `jobs` threads share the work; results are ordered by plan then seed.
pub fn run_batch(
    plans: &[StructurePlan],
    library: &BlockLibrary,
    cfg: &Config,
    trials: usize,
    base_seed: u64,
    jobs: usize,
) -> BatchReport {
    assert!(trials >= 1, "at least one trial per plan");
    let work: Vec<(usize, u64)> = (0..plans.len())
        .flat_map(|p| (0..trials as u64).map(move |k| (p, base_seed + k)))
        .collect();
    let run = || -> Vec<TrialReport> {
        work.par_iter()
            .map(|&(p, seed)| run_trial(&plans[p], library, cfg, seed))
            .collect()
    };
    let reports = match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    };
    let rows = plans
        .iter()
        .enumerate()
        .map(|(p, plan)| StructureStats::from_reports(&plan.name, plan.len(), &reports[p * trials..(p + 1) * trials]))
        .collect();
    BatchReport {
        format_version: FORMAT_VERSION,
        base_seed,
        calibration_enabled: cfg.calibration_enabled,
        noise: cfg.noise(),
        stats: BatchStats::from_rows(rows),
        trials: reports,
    }
}
