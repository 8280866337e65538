//! File formats owned by the command-line tool: scenes, action traces and
//! the triangle-mesh export.

use std::fmt::Write as _;

use blockasm::blocks::{BlockInstance, BlockLibrary};
use blockasm::config::FORMAT_VERSION;
use blockasm::planner::BlockStepPlan;
use blockasm::{Obb, Pose};
use serde::{Deserialize, Serialize};

/// Initial scene: true block poses plus optional perception estimates
/// (`null` marks an undetected block). Without estimates the planner sees
/// the true poses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub format_version: u32,
    pub blocks: Vec<BlockInstance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimates: Option<Vec<Option<Pose>>>,
}

impl SceneFile {
    pub fn new(blocks: Vec<BlockInstance>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            blocks,
            estimates: None,
        }
    }

    pub fn estimates(&self) -> Vec<Option<Pose>> {
        self.estimates
            .clone()
            .unwrap_or_else(|| self.blocks.iter().map(|b| Some(b.pose)).collect())
    }
}

/// Compiled plan: the starting scene and one record per block step, each
/// listing its primitive actions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceFile {
    pub format_version: u32,
    pub structure: String,
    pub calibration_enabled: bool,
    pub scene: Vec<BlockInstance>,
    pub steps: Vec<BlockStepPlan>,
}

impl TraceFile {
    /// Block poses after the first `k` steps.
    pub fn blocks_at(&self, k: usize) -> Vec<BlockInstance> {
        let mut blocks = self.scene.clone();
        for step in &self.steps[..k] {
            blocks[step.scene_index].pose = step.target;
        }
        blocks
    }
}

/// Outward-facing quads over [`Obb::corners`] indices (bit 0 = +x, bit 1 = +y,
/// bit 2 = +z).
const FACES: [[usize; 4]; 6] = [
    [0, 4, 6, 2],
    [1, 3, 7, 5],
    [0, 1, 5, 4],
    [2, 6, 7, 3],
    [0, 2, 3, 1],
    [4, 5, 7, 6],
];

/// Wavefront OBJ text with one group per named box set; every box becomes
/// 8 vertices and 12 triangles.
pub fn obj_mesh(groups: &[(String, Vec<Obb>)]) -> String {
    let mut out = String::from("# blockasm scene export\n");
    let mut base = 0usize;
    for (name, boxes) in groups {
        let _ = writeln!(out, "g {name}");
        for b in boxes {
            let corners = b.corners();
            for c in &corners {
                let _ = writeln!(out, "v {:.6} {:.6} {:.6}", c.x, c.y, c.z);
            }
            for face in FACES {
                let [a, b2, c, d] = face.map(|i| base + i + 1);
                let _ = writeln!(out, "f {a} {b2} {c}");
                let _ = writeln!(out, "f {a} {c} {d}");
            }
            base += 8;
        }
    }
    out
}

/// Mesh groups for blocks and, optionally, the gripper fingers.
pub fn scene_groups(
    blocks: &[BlockInstance],
    library: &BlockLibrary,
    fingers: Option<[Obb; 2]>,
) -> Result<Vec<(String, Vec<Obb>)>, String> {
    let mut groups = Vec::with_capacity(blocks.len() + 1);
    for (i, b) in blocks.iter().enumerate() {
        let model = library
            .get(&b.model_id)
            .ok_or_else(|| format!("unknown model id `{}`", b.model_id))?;
        groups.push((format!("block_{i}_{}", b.model_id), model.obbs(&b.pose)));
    }
    if let Some(f) = fingers {
        groups.push(("gripper".to_string(), f.to_vec()));
    }
    Ok(groups)
}
