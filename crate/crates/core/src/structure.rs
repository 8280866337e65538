//! Target structures: block poses relative to an anchor block plus an
//! assembly sequence.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blocks::BlockLibrary;
use crate::collision::obb_separation;
use crate::config::FORMAT_VERSION;
use crate::geometry::reference_axis;
use crate::Pose;

/// Bundled example plans, in order of increasing size.
pub const BUNDLED_PLANS: [(&str, &str); 4] = [
    ("structure1", include_str!("../data/plans/structure1.json")),
    ("structure2", include_str!("../data/plans/structure2.json")),
    ("structure3", include_str!("../data/plans/structure3.json")),
    ("structure4", include_str!("../data/plans/structure4.json")),
];

#[derive(Debug, Error)]
pub enum PlanFileError {
    #[error("plan parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported format_version {0} (expected 1)")]
    Version(u32),
    #[error("invalid pose in entry {entry}: {reason}")]
    Pose { entry: usize, reason: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanEntry {
    pub model: String,
    /// Pose relative to the anchor block.
    pub relative_pose: Pose,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StructurePlan {
    pub name: String,
    pub entries: Vec<PlanEntry>,
    pub sequence: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryFile {
    model: String,
    rotation: [f64; 9],
    translation: [f64; 3],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    format_version: u32,
    name: String,
    entries: Vec<EntryFile>,
    sequence: Vec<usize>,
}

impl StructurePlan {
    pub fn from_json(text: &str) -> Result<Self, PlanFileError> {
        let file: PlanFile = serde_json::from_str(text)?;
        if file.format_version != FORMAT_VERSION {
            return Err(PlanFileError::Version(file.format_version));
        }
        let entries = file
            .entries
            .into_iter()
            .enumerate()
            .map(|(i, e)| {
                let rotation = Matrix3::from_row_slice(&e.rotation);
                Pose::new(rotation, Vector3::from(e.translation))
                    .map(|relative_pose| PlanEntry {
                        model: e.model,
                        relative_pose,
                    })
                    .map_err(|err| PlanFileError::Pose {
                        entry: i,
                        reason: err.to_string(),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            name: file.name,
            entries,
            sequence: file.sequence,
        })
    }

    pub fn to_json(&self) -> String {
        let file = PlanFile {
            format_version: FORMAT_VERSION,
            name: self.name.clone(),
            entries: self
                .entries
                .iter()
                .map(|e| {
                    let r = e.relative_pose.rotation;
                    EntryFile {
                        model: e.model.clone(),
                        rotation: std::array::from_fn(|k| r[(k / 3, k % 3)]),
                        translation: e.relative_pose.translation.into(),
                    }
                })
                .collect(),
            sequence: self.sequence.clone(),
        };
        serde_json::to_string_pretty(&file).expect("plan serializes")
    }

    pub fn bundled() -> Vec<StructurePlan> {
        BUNDLED_PLANS
            .iter()
            .map(|(_, text)| StructurePlan::from_json(text).expect("bundled plan parses"))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// World pose of every entry for a given anchor pose.
pub fn resolve_world_poses(plan: &StructurePlan, anchor: &Pose) -> Vec<Pose> {
    plan.entries
        .iter()
        .map(|e| anchor.compose(&e.relative_pose))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Finding {
    UnknownModel { entry: usize, model: String },
    AnchorNotIdentity,
    TiltedEntry { entry: usize },
    Interpenetration { a: usize, b: usize, depth: f64 },
    UnsupportedBlock { entry: usize },
    SequenceDefect { detail: String },
}

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Finding::UnknownModel { entry, model } => {
                write!(f, "entry {entry}: unknown model id `{model}`")
            }
            Finding::AnchorNotIdentity => write!(f, "entry 0 (anchor) must have the identity pose"),
            Finding::TiltedEntry { entry } => {
                write!(f, "entry {entry}: no object axis is vertical")
            }
            Finding::Interpenetration { a, b, depth } => {
                write!(f, "interpenetration: entries {a} and {b} overlap by {depth:.6} m")
            }
            Finding::UnsupportedBlock { entry } => write!(
                f,
                "unsupported block: entry {entry} rests on neither the ground nor an earlier block"
            ),
            Finding::SequenceDefect { detail } => write!(f, "sequence defect: {detail}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.findings.is_empty()
    }
}

/// Depth beyond which two solids count as interpenetrating.
pub const CONTACT_TOLERANCE: f64 = 1e-6;
/// Gap within which a block counts as resting on its support.
pub const SUPPORT_TOLERANCE: f64 = 1e-4;

/// Checks model ids, anchor, levelness, interpenetration, support and the
/// sequence permutation. Findings are listed in that order.
pub fn validate_plan(plan: &StructurePlan, library: &BlockLibrary) -> ValidationReport {
    let mut findings = Vec::new();
    let n = plan.entries.len();

    let mut seen = vec![false; n];
    let mut sequence_ok = plan.sequence.len() == n;
    if plan.sequence.len() != n {
        findings.push(Finding::SequenceDefect {
            detail: format!("length {} does not match {} entries", plan.sequence.len(), n),
        });
    }
    for &i in &plan.sequence {
        if i >= n {
            findings.push(Finding::SequenceDefect {
                detail: format!("index {i} out of range"),
            });
            sequence_ok = false;
        } else if seen[i] {
            findings.push(Finding::SequenceDefect {
                detail: format!("index {i} repeated"),
            });
            sequence_ok = false;
        } else {
            seen[i] = true;
        }
    }
    if n == 0 {
        findings.push(Finding::SequenceDefect {
            detail: "plan has no entries".into(),
        });
        return ValidationReport { findings };
    }

    for (i, e) in plan.entries.iter().enumerate() {
        if library.get(&e.model).is_none() {
            findings.push(Finding::UnknownModel {
                entry: i,
                model: e.model.clone(),
            });
        }
    }
    if !plan.entries[0].relative_pose.approx_eq(&Pose::identity(), 1e-9) {
        findings.push(Finding::AnchorNotIdentity);
    }
    for (i, e) in plan.entries.iter().enumerate() {
        let up = reference_axis(&e.relative_pose);
        let vertical = e.relative_pose.rotation * up.unit::<f64>();
        if vertical.z < 1.0 - 1e-9 {
            findings.push(Finding::TiltedEntry { entry: i });
        }
    }

    let boxes: Vec<Option<Vec<_>>> = plan
        .entries
        .iter()
        .map(|e| library.get(&e.model).map(|m| m.obbs(&e.relative_pose)))
        .collect();
    for a in 0..n {
        for b in a + 1..n {
            let (Some(ba), Some(bb)) = (&boxes[a], &boxes[b]) else {
                continue;
            };
            let depth = deepest_overlap(ba, bb);
            if depth > CONTACT_TOLERANCE {
                findings.push(Finding::Interpenetration { a, b, depth });
            }
        }
    }

    if sequence_ok {
        let ground = boxes[0]
            .as_ref()
            .map(|bs| lowest_point(bs))
            .unwrap_or(0.0);
        for (k, &i) in plan.sequence.iter().enumerate() {
            if i == 0 {
                continue;
            }
            let Some(bi) = &boxes[i] else { continue };
            if lowest_point(bi) <= ground + SUPPORT_TOLERANCE {
                continue;
            }
            let shift = Pose::from_translation(Vector3::new(0.0, 0.0, -SUPPORT_TOLERANCE));
            let lowered: Vec<_> = bi.iter().map(|o| o.transformed(&shift)).collect();
            let supported = plan.sequence[..k].iter().any(|&j| {
                boxes[j]
                    .as_ref()
                    .is_some_and(|bj| deepest_overlap(&lowered, bj) > 1e-9)
            });
            if !supported {
                findings.push(Finding::UnsupportedBlock { entry: i });
            }
        }
    }
    ValidationReport { findings }
}

fn deepest_overlap(a: &[crate::Obb], b: &[crate::Obb]) -> f64 {
    let mut depth = 0.0f64;
    for x in a {
        for y in b {
            depth = depth.max(-obb_separation(x, y));
        }
    }
    depth
}

fn lowest_point(boxes: &[crate::Obb]) -> f64 {
    boxes
        .iter()
        .flat_map(|o| o.corners())
        .map(|c| c.z)
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{rot_x, rot_z};

    fn entry(model: &str, pose: Pose) -> PlanEntry {
        PlanEntry {
            model: model.into(),
            relative_pose: pose,
        }
    }

    fn tower(sequence: Vec<usize>) -> StructurePlan {
        let entries = (0..4)
            .map(|k| entry("cube", Pose::from_translation(Vector3::new(0.0, 0.0, 0.04 * k as f64))))
            .collect();
        StructurePlan {
            name: "tower".into(),
            entries,
            sequence,
        }
    }

    #[test]
    fn single_anchor_is_valid() {
        let plan = StructurePlan {
            name: "one".into(),
            entries: vec![entry("cube", Pose::identity())],
            sequence: vec![0],
        };
        assert!(validate_plan(&plan, &BlockLibrary::standard()).is_valid());
    }

    #[test]
    fn coincident_entries_interpenetrate() {
        let plan = StructurePlan {
            name: "two".into(),
            entries: vec![entry("brick", Pose::identity()), entry("brick", Pose::identity())],
            sequence: vec![0, 1],
        };
        let report = validate_plan(&plan, &BlockLibrary::standard());
        assert!(report
            .findings
            .iter()
            .any(|f| matches!(f, Finding::Interpenetration { a: 0, b: 1, .. })));
    }

    #[test]
    fn tower_order_matters() {
        let lib = BlockLibrary::standard();
        assert!(validate_plan(&tower(vec![0, 1, 2, 3]), &lib).is_valid());
        let report = validate_plan(&tower(vec![3, 2, 1, 0]), &lib);
        let unsupported: Vec<_> = report
            .findings
            .iter()
            .filter_map(|f| match f {
                Finding::UnsupportedBlock { entry } => Some(*entry),
                _ => None,
            })
            .collect();
        assert_eq!(unsupported, vec![3, 2, 1]);
    }

    #[test]
    fn sequence_defects_reported() {
        let lib = BlockLibrary::standard();
        for seq in [vec![0, 1, 2], vec![0, 1, 1, 2], vec![0, 1, 2, 9]] {
            let report = validate_plan(&tower(seq), &lib);
            assert!(report
                .findings
                .iter()
                .any(|f| matches!(f, Finding::SequenceDefect { .. })));
        }
    }

    #[test]
    fn unknown_model_reported() {
        let mut plan = tower(vec![0, 1, 2, 3]);
        plan.entries[2].model = "sphere".into();
        let report = validate_plan(&plan, &BlockLibrary::standard());
        assert!(report.findings.contains(&Finding::UnknownModel {
            entry: 2,
            model: "sphere".into()
        }));
    }

    #[test]
    fn tilted_entry_reported() {
        let mut plan = tower(vec![0, 1, 2, 3]);
        plan.entries[3].relative_pose.rotation = rot_x(0.3);
        let report = validate_plan(&plan, &BlockLibrary::standard());
        assert!(report.findings.contains(&Finding::TiltedEntry { entry: 3 }));
    }

    #[test]
    fn resolve_examples() {
        let plan = tower(vec![0, 1, 2, 3]);
        let rel: Vec<_> = plan.entries.iter().map(|e| e.relative_pose).collect();
        assert_eq!(resolve_world_poses(&plan, &Pose::identity()), rel);

        let t = Vector3::new(0.3, -0.1, 0.02);
        for (w, r) in resolve_world_poses(&plan, &Pose::from_translation(t)).iter().zip(&rel) {
            assert_eq!(w.translation, r.translation + t);
        }

        let yawed = resolve_world_poses(&plan, &Pose::from_rotation(rot_z(std::f64::consts::FRAC_PI_2)));
        for i in 0..4 {
            for j in 0..4 {
                let before = rel[i].inverse().compose(&rel[j]);
                let after = yawed[i].inverse().compose(&yawed[j]);
                assert!(before.approx_eq(&after, 1e-12));
            }
        }
    }

    #[test]
    fn json_round_trip_and_bundled_plans_valid() {
        let lib = BlockLibrary::standard();
        let plans = StructurePlan::bundled();
        let sizes: Vec<_> = plans.iter().map(StructurePlan::len).collect();
        assert_eq!(sizes, vec![4, 6, 8, 8]);
        for plan in &plans {
            let report = validate_plan(plan, &lib);
            assert!(report.is_valid(), "{}: {:?}", plan.name, report.findings);
            assert_eq!(&StructurePlan::from_json(&plan.to_json()).unwrap(), plan);
        }
    }

    #[test]
    fn malformed_files_rejected() {
        assert!(StructurePlan::from_json("{\"format_version\": 1, \"name\": \"x\"").is_err());
        let bad_version = r#"{"format_version": 3, "name": "x", "entries": [], "sequence": []}"#;
        assert!(matches!(StructurePlan::from_json(bad_version), Err(PlanFileError::Version(3))));
    }
}
