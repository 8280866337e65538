//! Rigid block models built from axis-aligned cuboids.
//!
//! A model carries its primitives, a declared rotational symmetry group, a
//! blue-noise surface sample used by the pose metrics and the diameter of that
//! sample. The bundled eight-model library lives in `data/blocks.json`.

use std::collections::HashMap;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Obb;
use crate::geometry::{cube_rotations, Axis, GeometryError, SignedAxis};
use crate::{Pose, SymmetryGroup};

const BUNDLED_LIBRARY: &str = include_str!("../data/blocks.json");

/// Default Poisson-disk spacing for surface samples (meters).
pub const DEFAULT_SPACING: f64 = 0.005;
const DEFAULT_SEED: u64 = 0x5eed_b10c;
const ON_SURFACE_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum BlockError {
    #[error("model '{0}' has no primitives")]
    NoPrimitives(String),
    #[error("model '{0}': half-extents must be strictly positive")]
    NonPositiveExtent(String),
    #[error("model '{0}': primitive {1} is not axis-aligned in the object frame")]
    NotAxisAligned(String, usize),
    #[error("spacing too coarse: {spacing} m exceeds smallest face dimension {smallest} m")]
    SpacingTooCoarse { spacing: f64, smallest: f64 },
    #[error("spacing must be positive, got {0}")]
    BadSpacing(f64),
    #[error("model '{id}': symmetry element {index} does not map the block onto itself")]
    BadSymmetry { id: String, index: usize },
    #[error("model '{0}': invalid symmetry group: {1}")]
    Group(String, GeometryError),
    #[error("duplicate model id '{0}'")]
    DuplicateId(String),
    #[error("unknown model id '{0}'")]
    UnknownModel(String),
    #[error("unsupported library format version {0}")]
    FormatVersion(u32),
    #[error("library parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Axis-aligned cuboid primitive placed in the object frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cuboid {
    pub half_extents: Vector3<f64>,
    pub pose: Pose,
}

impl Cuboid {
    pub fn centered(half_extents: Vector3<f64>) -> Self {
        Self {
            half_extents,
            pose: Pose::identity(),
        }
    }

    pub fn at(half_extents: Vector3<f64>, center: Vector3<f64>) -> Self {
        Self {
            half_extents,
            pose: Pose::from_translation(center),
        }
    }

    /// Half-extents expressed along the object axes.
    fn object_half_extents(&self) -> Vector3<f64> {
        self.pose.rotation.abs() * self.half_extents
    }

    fn object_min(&self) -> Vector3<f64> {
        self.pose.translation - self.object_half_extents()
    }

    fn object_max(&self) -> Vector3<f64> {
        self.pose.translation + self.object_half_extents()
    }

    fn volume(&self) -> f64 {
        8.0 * self.half_extents.x * self.half_extents.y * self.half_extents.z
    }

    /// Strict interior test in the object frame.
    fn contains_strict(&self, p: &Vector3<f64>, eps: f64) -> bool {
        let lo = self.object_min();
        let hi = self.object_max();
        (0..3).all(|i| p[i] > lo[i] + eps && p[i] < hi[i] - eps)
    }

    pub fn obb(&self, placement: &Pose) -> Obb {
        let world = placement.compose(&self.pose);
        Obb::new(world.translation, self.half_extents, world.rotation)
    }
}

/// A rigid block: union of cuboids plus metric metadata.
#[derive(Clone, Debug)]
pub struct BlockModel {
    pub id: String,
    pub primitives: Vec<Cuboid>,
    pub symmetry: SymmetryGroup,
    pub surface_points: Vec<Vector3<f64>>,
    pub diameter: f64,
    pub spacing: f64,
}

impl BlockModel {
    /// Builds a model, sampling its surface at `spacing` with `seed`.
    pub fn new(
        id: impl Into<String>,
        primitives: Vec<Cuboid>,
        symmetry: SymmetryGroup,
        spacing: f64,
        seed: u64,
    ) -> Result<Self, BlockError> {
        let id = id.into();
        validate_primitives(&id, &primitives)?;
        let surface_points = sample_primitives(&primitives, spacing, seed)?;
        let diameter = max_pairwise_distance(&surface_points);
        let model = Self {
            id,
            primitives,
            symmetry,
            surface_points,
            diameter,
            spacing,
        };
        model.check_symmetry()?;
        Ok(model)
    }

    /// Same as [`BlockModel::new`] with the symmetry group derived from the
    /// primitive layout.
    pub fn with_derived_symmetry(
        id: impl Into<String>,
        primitives: Vec<Cuboid>,
        spacing: f64,
        seed: u64,
    ) -> Result<Self, BlockError> {
        let id = id.into();
        validate_primitives(&id, &primitives)?;
        let symmetry = derive_symmetry(&primitives);
        Self::new(id, primitives, symmetry, spacing, seed)
    }

    fn check_symmetry(&self) -> Result<(), BlockError> {
        for (index, s) in self.symmetry.elements().iter().enumerate() {
            if !maps_onto_itself(&self.primitives, s) {
                return Err(BlockError::BadSymmetry {
                    id: self.id.clone(),
                    index,
                });
            }
        }
        Ok(())
    }

    pub fn bbox_min(&self) -> Vector3<f64> {
        self.primitives
            .iter()
            .map(Cuboid::object_min)
            .reduce(|a, b| a.inf(&b))
            .expect("validated non-empty")
    }

    pub fn bbox_max(&self) -> Vector3<f64> {
        self.primitives
            .iter()
            .map(Cuboid::object_max)
            .reduce(|a, b| a.sup(&b))
            .expect("validated non-empty")
    }

    pub fn bbox_center(&self) -> Vector3<f64> {
        (self.bbox_min() + self.bbox_max()) * 0.5
    }

    /// Full bounding-box extent along an object axis.
    pub fn extent(&self, axis: Axis) -> f64 {
        let i = axis.index();
        self.bbox_max()[i] - self.bbox_min()[i]
    }

    /// Distance from the object origin to the bounding-box face on the
    /// opposite side of `up`, i.e. the origin height when resting with `up`
    /// pointing at world `+z`.
    pub fn resting_height(&self, up: SignedAxis) -> f64 {
        let i = up.axis.index();
        match up.sign {
            crate::geometry::Sign::Pos => -self.bbox_min()[i],
            crate::geometry::Sign::Neg => self.bbox_max()[i],
        }
    }

    /// Volume-weighted centroid (primitives are assumed disjoint).
    pub fn centroid(&self) -> Vector3<f64> {
        let total: f64 = self.primitives.iter().map(Cuboid::volume).sum();
        self.primitives
            .iter()
            .map(|c| c.pose.translation * c.volume())
            .sum::<Vector3<f64>>()
            / total
    }

    /// Up axes for which the block rests stably on the opposite face: the
    /// centroid projects inside the bounding rectangle of the contact patch.
    pub fn stable_faces(&self) -> Vec<SignedAxis> {
        let com = self.centroid();
        SignedAxis::ALL
            .into_iter()
            .filter(|&up| {
                let down = up.negate();
                let n = down.unit::<f64>();
                let i = up.axis.index();
                let plane = self
                    .primitives
                    .iter()
                    .map(|c| {
                        let lo = c.object_min();
                        let hi = c.object_max();
                        n.dot(&lo).max(n.dot(&hi))
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                let mut lo = Vector3::repeat(f64::INFINITY);
                let mut hi = Vector3::repeat(f64::NEG_INFINITY);
                for c in &self.primitives {
                    let (cl, ch) = (c.object_min(), c.object_max());
                    if (n.dot(&cl).max(n.dot(&ch)) - plane).abs() < ON_SURFACE_TOL {
                        lo = lo.inf(&cl);
                        hi = hi.sup(&ch);
                    }
                }
                (0..3)
                    .filter(|&k| k != i)
                    .all(|k| com[k] > lo[k] + 1e-9 && com[k] < hi[k] - 1e-9)
            })
            .collect()
    }

    /// World-frame boxes of all primitives at `pose`.
    pub fn obbs(&self, pose: &Pose) -> Vec<Obb> {
        self.primitives.iter().map(|c| c.obb(pose)).collect()
    }

    /// World-frame corners of the bounding box at `pose`.
    pub fn bbox_corners(&self, pose: &Pose) -> [Vector3<f64>; 8] {
        let lo = self.bbox_min();
        let hi = self.bbox_max();
        std::array::from_fn(|k| {
            let p = Vector3::new(
                if k & 1 == 0 { lo.x } else { hi.x },
                if k & 2 == 0 { lo.y } else { hi.y },
                if k & 4 == 0 { lo.z } else { hi.z },
            );
            pose.transform_point(&p)
        })
    }

    /// Distance from `p` (object frame) to the boundary of the primitive union.
    pub fn surface_distance(&self, p: &Vector3<f64>) -> f64 {
        let inside = self.primitives.iter().any(|c| c.contains_strict(p, 0.0));
        if inside {
            // Depth below the union boundary: distance to leave every containing box.
            let mut best = 0.0f64;
            for c in &self.primitives {
                if c.contains_strict(p, 0.0) {
                    let lo = c.object_min();
                    let hi = c.object_max();
                    let d = (0..3)
                        .map(|i| (p[i] - lo[i]).min(hi[i] - p[i]))
                        .fold(f64::INFINITY, f64::min);
                    best = best.max(d);
                }
            }
            best
        } else {
            self.primitives
                .iter()
                .map(|c| {
                    let lo = c.object_min();
                    let hi = c.object_max();
                    let q = p.sup(&lo).inf(&hi);
                    (p - q).norm()
                })
                .fold(f64::INFINITY, f64::min)
        }
    }
}

fn validate_primitives(id: &str, primitives: &[Cuboid]) -> Result<(), BlockError> {
    if primitives.is_empty() {
        return Err(BlockError::NoPrimitives(id.to_string()));
    }
    for (k, c) in primitives.iter().enumerate() {
        if c.half_extents.iter().any(|&h| h <= 0.0 || !h.is_finite()) {
            return Err(BlockError::NonPositiveExtent(id.to_string()));
        }
        let signed_perm = c
            .pose
            .rotation
            .iter()
            .all(|&v| v.abs() < 1e-9 || (v.abs() - 1.0).abs() < 1e-9);
        if !signed_perm || !c.pose.is_valid() {
            return Err(BlockError::NotAxisAligned(id.to_string(), k));
        }
    }
    Ok(())
}

/// Whether rotation `s` maps the set of primitive boxes onto itself.
fn maps_onto_itself(primitives: &[Cuboid], s: &Matrix3<f64>) -> bool {
    let key = |lo: Vector3<f64>, hi: Vector3<f64>| (lo, hi);
    let boxes: Vec<_> = primitives
        .iter()
        .map(|c| key(c.object_min(), c.object_max()))
        .collect();
    primitives.iter().all(|c| {
        let a = s * c.object_min();
        let b = s * c.object_max();
        let (lo, hi) = (a.inf(&b), a.sup(&b));
        boxes
            .iter()
            .any(|(l, h)| (l - lo).amax() < 1e-9 && (h - hi).amax() < 1e-9)
    })
}

/// Symmetry group of a cuboid union: all cube rotations that permute its boxes.
pub fn derive_symmetry(primitives: &[Cuboid]) -> SymmetryGroup {
    let elements: Vec<_> = cube_rotations::<f64>()
        .into_iter()
        .filter(|s| maps_onto_itself(primitives, s))
        .collect();
    SymmetryGroup::new(elements).expect("stabilizer of a box set is a group")
}

struct Face {
    center: Vector3<f64>,
    u: Vector3<f64>,
    v: Vector3<f64>,
    half_u: f64,
    half_v: f64,
    normal: Vector3<f64>,
}

fn faces(primitives: &[Cuboid]) -> Vec<Face> {
    let mut out = Vec::with_capacity(primitives.len() * 6);
    for c in primitives {
        for axis in 0..3 {
            let (iu, iv) = ((axis + 1) % 3, (axis + 2) % 3);
            for sign in [1.0, -1.0] {
                let col = |i: usize| c.pose.rotation.column(i).into_owned();
                let normal = col(axis) * sign;
                out.push(Face {
                    center: c.pose.translation + normal * c.half_extents[axis],
                    u: col(iu),
                    v: col(iv),
                    half_u: c.half_extents[iu],
                    half_v: c.half_extents[iv],
                    normal,
                });
            }
        }
    }
    out
}

fn on_boundary(primitives: &[Cuboid], p: &Vector3<f64>, normal: &Vector3<f64>) -> bool {
    let probe = p + normal * 1e-7;
    !primitives.iter().any(|c| c.contains_strict(&probe, 0.0))
}

/// Samples the surface of a model with dart throwing.
pub fn sample_surface(model: &BlockModel, target_spacing: f64) -> Result<Vec<Vector3<f64>>, BlockError> {
    sample_primitives(&model.primitives, target_spacing, DEFAULT_SEED)
}

/// Dart throwing on the union boundary: area-weighted face choice, rejection
/// radius `0.5 × spacing`, stopping once the point count reaches
/// `boundary area / spacing²`.
pub fn sample_primitives(
    primitives: &[Cuboid],
    spacing: f64,
    seed: u64,
) -> Result<Vec<Vector3<f64>>, BlockError> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(BlockError::BadSpacing(spacing));
    }
    let smallest = primitives
        .iter()
        .flat_map(|c| c.half_extents.iter().map(|h| 2.0 * h).collect::<Vec<_>>())
        .fold(f64::INFINITY, f64::min);
    if spacing > smallest {
        return Err(BlockError::SpacingTooCoarse { spacing, smallest });
    }
    let faces = faces(primitives);

    // Exposed area per face, estimated on a fixed grid.
    const GRID: usize = 48;
    let exposed: Vec<f64> = faces
        .iter()
        .map(|f| {
            let mut hits = 0usize;
            for a in 0..GRID {
                for b in 0..GRID {
                    let su = ((a as f64 + 0.5) / GRID as f64) * 2.0 - 1.0;
                    let sv = ((b as f64 + 0.5) / GRID as f64) * 2.0 - 1.0;
                    let p = f.center + f.u * (su * f.half_u) + f.v * (sv * f.half_v);
                    if on_boundary(primitives, &p, &f.normal) {
                        hits += 1;
                    }
                }
            }
            4.0 * f.half_u * f.half_v * hits as f64 / (GRID * GRID) as f64
        })
        .collect();
    let total: f64 = exposed.iter().sum();
    let target = (total / (spacing * spacing)).ceil().max(1.0) as usize;
    let cumulative: Vec<f64> = exposed
        .iter()
        .scan(0.0, |acc, a| {
            *acc += a;
            Some(*acc)
        })
        .collect();

    let radius = 0.5 * spacing;
    let cell = radius;
    let cell_of = |p: &Vector3<f64>| {
        (
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        )
    };
    let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    let mut points: Vec<Vector3<f64>> = Vec::with_capacity(target);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_attempts = 60 * target + 1000;
    let r2 = radius * radius;

    for _ in 0..max_attempts {
        if points.len() >= target {
            break;
        }
        let pick = rng.random::<f64>() * total;
        let idx = cumulative.partition_point(|&c| c <= pick).min(faces.len() - 1);
        let f = &faces[idx];
        let su: f64 = rng.random_range(-1.0..1.0);
        let sv: f64 = rng.random_range(-1.0..1.0);
        let p = f.center + f.u * (su * f.half_u) + f.v * (sv * f.half_v);
        if !on_boundary(primitives, &p, &f.normal) {
            continue;
        }
        let (cx, cy, cz) = cell_of(&p);
        let mut clear = true;
        'outer: for dx in -2..=2 {
            for dy in -2..=2 {
                for dz in -2..=2 {
                    if let Some(list) = grid.get(&(cx + dx, cy + dy, cz + dz)) {
                        if list.iter().any(|&j| (points[j] - p).norm_squared() < r2) {
                            clear = false;
                            break 'outer;
                        }
                    }
                }
            }
        }
        if clear {
            grid.entry((cx, cy, cz)).or_default().push(points.len());
            points.push(p);
        }
    }
    Ok(points)
}

/// Exact all-pairs maximum distance.
pub fn max_pairwise_distance(points: &[Vector3<f64>]) -> f64 {
    let mut best = 0.0f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.max((a - b).norm_squared());
        }
    }
    best.sqrt()
}

/// A placed block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockInstance {
    #[serde(rename = "model")]
    pub model_id: String,
    pub pose: Pose,
}

/// Resolvable set of block models.
#[derive(Clone, Debug)]
pub struct BlockLibrary {
    models: Vec<BlockModel>,
}

impl BlockLibrary {
    pub fn new(models: Vec<BlockModel>) -> Result<Self, BlockError> {
        for (i, m) in models.iter().enumerate() {
            if models[..i].iter().any(|o| o.id == m.id) {
                return Err(BlockError::DuplicateId(m.id.clone()));
            }
        }
        Ok(Self { models })
    }

    pub fn standard() -> Self {
        Self::from_json(BUNDLED_LIBRARY).expect("bundled library is valid")
    }

    pub fn get(&self, id: &str) -> Option<&BlockModel> {
        self.models.iter().find(|m| m.id == id)
    }

    pub fn require(&self, id: &str) -> Result<&BlockModel, BlockError> {
        self.get(id).ok_or_else(|| BlockError::UnknownModel(id.to_string()))
    }

    pub fn models(&self) -> &[BlockModel] {
        &self.models
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn from_json(text: &str) -> Result<Self, BlockError> {
        let file: LibraryFile = serde_json::from_str(text)?;
        file.build()
    }

    pub fn to_json(&self, seed: Option<u64>) -> String {
        let spacing = self.models.first().map_or(DEFAULT_SPACING, |m| m.spacing);
        let file = LibraryFile {
            format_version: 1,
            spacing: Some(spacing),
            seed,
            models: self
                .models
                .iter()
                .map(|m| ModelEntry {
                    id: m.id.clone(),
                    primitives: m.primitives.clone(),
                    symmetry: m
                        .symmetry
                        .elements()
                        .iter()
                        .map(|s| {
                            let mut a = [0.0; 9];
                            for r in 0..3 {
                                for c in 0..3 {
                                    a[r * 3 + c] = s[(r, c)];
                                }
                            }
                            a
                        })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("serializable")
    }
}

/// The eight bundled block definitions.
pub fn standard_library() -> Vec<BlockModel> {
    BlockLibrary::standard().models
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LibraryFile {
    format_version: u32,
    #[serde(default)]
    spacing: Option<f64>,
    #[serde(default)]
    seed: Option<u64>,
    models: Vec<ModelEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelEntry {
    id: String,
    primitives: Vec<Cuboid>,
    /// Row-major rotations; must include the identity.
    symmetry: Vec<[f64; 9]>,
}

impl LibraryFile {
    fn build(self) -> Result<BlockLibrary, BlockError> {
        if self.format_version != 1 {
            return Err(BlockError::FormatVersion(self.format_version));
        }
        let spacing = self.spacing.unwrap_or(DEFAULT_SPACING);
        let seed = self.seed.unwrap_or(DEFAULT_SEED);
        let models = self
            .models
            .into_iter()
            .enumerate()
            .map(|(k, m)| {
                let elements = m
                    .symmetry
                    .iter()
                    .map(|a| Matrix3::from_row_slice(a))
                    .collect();
                let group =
                    SymmetryGroup::new(elements).map_err(|e| BlockError::Group(m.id.clone(), e))?;
                BlockModel::new(m.id, m.primitives, group, spacing, seed.wrapping_add(k as u64))
            })
            .collect::<Result<Vec<_>, _>>()?;
        BlockLibrary::new(models)
    }
}
