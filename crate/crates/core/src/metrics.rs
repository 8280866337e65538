//! Pose accuracy metrics (ADD, ADD-S, n° n cm) and recall-table aggregation.

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blocks::BlockLibrary;
use crate::geometry::{geodesic_angle, symmetry_equivalents, Pose, SymmetryGroup};
use crate::scalar::{lit, to_f64};
use crate::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("empty point set")]
    EmptyPoints,
    #[error("unknown object id `{0}`")]
    UnknownObject(String),
    #[error("no records")]
    NoRecords,
    #[error("records parse error: {0}")]
    Parse(String),
    #[error("unsupported format_version {0} (expected 1)")]
    Version(u32),
}

/// Mean distance between corresponding transformed points.
pub fn add_error<T: Real>(est: &Pose<T>, gt: &Pose<T>, points: &[Vector3<T>]) -> Result<T, MetricsError> {
    if points.is_empty() {
        return Err(MetricsError::EmptyPoints);
    }
    let sum = points.iter().fold(T::zero(), |acc, p| {
        acc + (est.transform_point(p) - gt.transform_point(p)).norm()
    });
    Ok(sum / lit::<T>(points.len() as f64))
}

/// Mean distance from each ground-truth point to the nearest estimated point.
pub fn adds_error<T: Real>(est: &Pose<T>, gt: &Pose<T>, points: &[Vector3<T>]) -> Result<T, MetricsError> {
    if points.is_empty() {
        return Err(MetricsError::EmptyPoints);
    }
    let moved: Vec<Vector3<T>> = points.iter().map(|p| est.transform_point(p)).collect();
    let sum = points.iter().fold(T::zero(), |acc, p| {
        let g = gt.transform_point(p);
        let nearest = moved
            .iter()
            .map(|m| (m - g).norm_squared())
            .fold(T::max_value().expect("bounded scalar"), |a, b| if b < a { b } else { a });
        acc + nearest.sqrt()
    });
    Ok(sum / lit::<T>(points.len() as f64))
}

/// Whether some symmetry-equivalent ground truth lies within `n_deg` degrees
/// and `n_cm` centimeters of the estimate at once.
pub fn ncm_ndeg<T: Real>(est: &Pose<T>, gt: &Pose<T>, sym: &SymmetryGroup<T>, n_deg: T, n_cm: T) -> bool {
    let max_angle = n_deg * T::pi() / lit::<T>(180.0);
    let max_trans = n_cm / lit::<T>(100.0);
    let trans = (est.translation - gt.translation).norm();
    trans <= max_trans
        && symmetry_equivalents(gt, sym)
            .iter()
            .any(|g| geodesic_angle(&est.rotation, &g.rotation) <= max_angle)
}

/// Translation error minimized over symmetry equivalents. Equivalents share
/// the origin, so this equals the plain translation distance.
pub fn translation_error<T: Real>(est: &Pose<T>, gt: &Pose<T>, sym: &SymmetryGroup<T>) -> T {
    symmetry_equivalents(gt, sym)
        .iter()
        .map(|g| (est.translation - g.translation).norm())
        .fold(T::max_value().expect("bounded scalar"), |a, b| if b < a { b } else { a })
}

/// One predicted pose with its ground truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    pub object: String,
    pub estimated: crate::Pose,
    pub ground_truth: crate::Pose,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordsFile {
    pub format_version: u32,
    pub records: Vec<PoseRecord>,
}

impl RecordsFile {
    pub fn new(records: Vec<PoseRecord>) -> Self {
        Self {
            format_version: crate::config::FORMAT_VERSION,
            records,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, MetricsError> {
        let file: RecordsFile = serde_json::from_str(text).map_err(|e| MetricsError::Parse(e.to_string()))?;
        if file.format_version != crate::config::FORMAT_VERSION {
            return Err(MetricsError::Version(file.format_version));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("records serialize")
    }
}

/// Recall thresholds; ADD thresholds are fractions of the model diameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub add_fractions: [f64; 3],
    pub ncm_deg: f64,
    pub ncm_cm: f64,
    pub trans_cm: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            add_fractions: [0.02, 0.05, 0.1],
            ncm_deg: 5.0,
            ncm_cm: 5.0,
            trans_cm: 2.0,
        }
    }
}

pub const COLUMNS: [&str; 5] = ["0.02d", "0.05d", "0.1d", "5deg5cm", "2cm"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecallRow {
    pub object: String,
    pub count: usize,
    /// Recall per column of [`COLUMNS`].
    pub recall: [f64; 5],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecallTable {
    pub rows: Vec<RecallRow>,
    pub mean: [f64; 5],
}

/// Per-record hits for each column.
fn score(record: &PoseRecord, library: &BlockLibrary, th: &Thresholds) -> Result<[bool; 5], MetricsError> {
    let model = library
        .get(&record.object)
        .ok_or_else(|| MetricsError::UnknownObject(record.object.clone()))?;
    let (est, gt) = (&record.estimated, &record.ground_truth);
    let add = if model.symmetry.is_trivial() {
        add_error(est, gt, &model.surface_points)?
    } else {
        adds_error(est, gt, &model.surface_points)?
    };
    let d = model.diameter;
    Ok([
        add <= th.add_fractions[0] * d,
        add <= th.add_fractions[1] * d,
        add <= th.add_fractions[2] * d,
        ncm_ndeg(est, gt, &model.symmetry, th.ncm_deg, th.ncm_cm),
        translation_error(est, gt, &model.symmetry) <= th.trans_cm / 100.0,
    ])
}

/// Builds the per-object recall table; rows are sorted by object id and the
/// mean row averages the rows.
pub fn build_recall_table(
    records: &[PoseRecord],
    library: &BlockLibrary,
    thresholds: &Thresholds,
) -> Result<RecallTable, MetricsError> {
    let hits: Vec<(String, [bool; 5])> = records
        .par_iter()
        .map(|r| score(r, library, thresholds).map(|h| (r.object.clone(), h)))
        .collect::<Result<_, _>>()?;
    let mut counts: std::collections::BTreeMap<String, (usize, [usize; 5])> = Default::default();
    for (object, h) in hits {
        let entry = counts.entry(object).or_default();
        entry.0 += 1;
        for (c, hit) in entry.1.iter_mut().zip(h) {
            *c += usize::from(hit);
        }
    }
    let rows: Vec<RecallRow> = counts
        .into_iter()
        .map(|(object, (count, hits))| RecallRow {
            object,
            count,
            recall: hits.map(|h| h as f64 / count as f64),
        })
        .collect();
    let mut mean = [0.0; 5];
    if !rows.is_empty() {
        for row in &rows {
            for (m, r) in mean.iter_mut().zip(row.recall) {
                *m += r;
            }
        }
        for m in &mut mean {
            *m /= rows.len() as f64;
        }
    }
    Ok(RecallTable { rows, mean })
}

impl RecallTable {
    /// Aligned text, recalls in percent.
    pub fn to_text(&self) -> String {
        let mut out = format!("{:<14}{:>8}", "object", "n");
        for c in COLUMNS {
            out.push_str(&format!("{c:>10}"));
        }
        out.push('\n');
        let line = |name: &str, n: String, r: &[f64; 5]| {
            let mut s = format!("{name:<14}{n:>8}");
            for v in r {
                s.push_str(&format!("{:>10.2}", v * 100.0));
            }
            s.push('\n');
            s
        };
        for row in &self.rows {
            out.push_str(&line(&row.object, row.count.to_string(), &row.recall));
        }
        let total: usize = self.rows.iter().map(|r| r.count).sum();
        out.push_str(&line("mean", total.to_string(), &self.mean));
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("object,count,{}\n", COLUMNS.join(","));
        let line = |name: &str, n: usize, r: &[f64; 5]| {
            let cols: Vec<String> = r.iter().map(|v| format!("{v:.4}")).collect();
            format!("{name},{n},{}\n", cols.join(","))
        };
        for row in &self.rows {
            out.push_str(&line(&row.object, row.count, &row.recall));
        }
        let total: usize = self.rows.iter().map(|r| r.count).sum();
        out.push_str(&line("mean", total, &self.mean));
        out
    }
}

/// Mean of a metric over records, reported in `f64` for any scalar.
pub fn mean_of<T: Real>(values: &[T]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().map(|v| to_f64(*v)).sum::<f64>() / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{axis_angle, rot_z, rotation_from_uniforms};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pose(rng: &mut impl Rng) -> crate::Pose {
        crate::Pose::from_parts_unchecked(
            rotation_from_uniforms(rng.random(), rng.random(), rng.random()),
            Vector3::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * 0.2,
        )
    }

    #[test]
    fn identical_poses_score_zero() {
        let lib = BlockLibrary::standard();
        let pts = &lib.get("brick").unwrap().surface_points;
        let p = crate::Pose::from_rotation(rot_z(0.4));
        assert_eq!(add_error(&p, &p, pts).unwrap(), 0.0);
        assert_eq!(adds_error(&p, &p, pts).unwrap(), 0.0);
        assert_eq!(add_error::<f64>(&p, &p, &[]), Err(MetricsError::EmptyPoints));
        assert_eq!(adds_error::<f64>(&p, &p, &[]), Err(MetricsError::EmptyPoints));
    }

    #[test]
    fn pure_translation_add_is_offset_norm() {
        let lib = BlockLibrary::standard();
        let pts = &lib.get("l_block").unwrap().surface_points;
        let gt = crate::Pose::from_rotation(rot_z(1.1));
        let t = Vector3::new(0.003, -0.004, 0.012);
        let est = crate::Pose::from_parts_unchecked(gt.rotation, gt.translation + t);
        assert!((add_error(&est, &gt, pts).unwrap() - t.norm()).abs() < 1e-12);
    }

    #[test]
    fn add_matches_direct_summation() {
        let lib = BlockLibrary::standard();
        let pts = &lib.get("pillar").unwrap().surface_points;
        let gt = crate::Pose::identity();
        let est = crate::Pose::from_rotation(axis_angle(&Vector3::x(), 5f64.to_radians()));
        let mut sum = 0.0;
        for p in pts {
            sum += (est.rotation * p - p).norm();
        }
        assert!((add_error(&est, &gt, pts).unwrap() - sum / pts.len() as f64).abs() < 1e-12);
    }

    #[test]
    fn symmetry_flip_adds_within_two_spacings() {
        let lib = BlockLibrary::standard();
        for model in lib.models() {
            let gt = crate::Pose::identity();
            for s in model.symmetry.elements() {
                let est = crate::Pose::from_rotation(*s);
                let v = adds_error(&est, &gt, &model.surface_points).unwrap();
                assert!(v <= 2.0 * model.spacing, "{}: {v}", model.id);
            }
        }
    }

    #[test]
    fn adds_bounded_by_add_and_invariant() {
        let lib = BlockLibrary::standard();
        let pts = &lib.get("brick").unwrap().surface_points;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let (a, b, c) = (random_pose(&mut rng), random_pose(&mut rng), random_pose(&mut rng));
            let add = add_error(&a, &b, pts).unwrap();
            assert!(adds_error(&a, &b, pts).unwrap() <= add);
            let moved = add_error(&c.compose(&a), &c.compose(&b), pts).unwrap();
            assert!((moved - add).abs() < 1e-10);
        }
    }

    #[test]
    fn ncm_examples() {
        let lib = BlockLibrary::standard();
        let gt = crate::Pose::identity();
        let trivial = SymmetryGroup::trivial();
        assert!(ncm_ndeg(&gt, &gt, &trivial, 0.1, 0.1));
        let six = crate::Pose::from_rotation(rot_z(6f64.to_radians()));
        assert!(!ncm_ndeg(&six, &gt, &trivial, 5.0, 5.0));
        let brick = lib.get("brick").unwrap();
        let flipped = crate::Pose::from_rotation(rot_z(std::f64::consts::PI));
        assert!(ncm_ndeg(&flipped, &gt, &brick.symmetry, 5.0, 5.0));
        assert!(!ncm_ndeg(&flipped, &gt, &trivial, 5.0, 5.0));
    }

    #[test]
    fn perfect_records_give_full_recall() {
        let lib = BlockLibrary::standard();
        let records: Vec<_> = lib
            .models()
            .iter()
            .map(|m| PoseRecord {
                object: m.id.clone(),
                estimated: crate::Pose::identity(),
                ground_truth: crate::Pose::identity(),
            })
            .collect();
        let table = build_recall_table(&records, &lib, &Thresholds::default()).unwrap();
        assert_eq!(table.rows.len(), lib.len());
        assert_eq!(table.mean, [1.0; 5]);
        assert!(table.to_text().contains("100.00"));
    }

    #[test]
    fn recall_monotone_and_mean_of_rows() {
        let lib = BlockLibrary::standard();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let records: Vec<_> = (0..300)
            .map(|i| {
                let m = &lib.models()[i % lib.len()];
                let gt = random_pose(&mut rng);
                let est = crate::Pose::from_parts_unchecked(
                    axis_angle(&Vector3::z(), rng.random::<f64>() * 0.2) * gt.rotation,
                    gt.translation + Vector3::new(rng.random::<f64>(), rng.random(), rng.random()) * 0.02,
                );
                PoseRecord { object: m.id.clone(), estimated: est, ground_truth: gt }
            })
            .collect();
        let table = build_recall_table(&records, &lib, &Thresholds::default()).unwrap();
        for row in &table.rows {
            assert!(row.recall[0] <= row.recall[1] && row.recall[1] <= row.recall[2]);
        }
        for c in 0..5 {
            let m: f64 = table.rows.iter().map(|r| r.recall[c]).sum::<f64>() / table.rows.len() as f64;
            assert!((m - table.mean[c]).abs() < 1e-15);
        }
    }

    #[test]
    fn unknown_object_rejected() {
        let lib = BlockLibrary::standard();
        let r = PoseRecord {
            object: "nope".into(),
            estimated: crate::Pose::identity(),
            ground_truth: crate::Pose::identity(),
        };
        assert_eq!(
            build_recall_table(&[r], &lib, &Thresholds::default()),
            Err(MetricsError::UnknownObject("nope".into()))
        );
    }

    #[test]
    fn generic_in_f32() {
        let pts = [Vector3::new(0.01f32, 0.0, 0.0), Vector3::new(0.0, 0.02, 0.0)];
        let gt = crate::Pose32::identity();
        let est = crate::Pose32::from_translation(Vector3::new(0.0, 0.0, 0.005));
        assert!((add_error(&est, &gt, &pts).unwrap() - 0.005).abs() < 1e-7);
        assert!(adds_error(&est, &gt, &pts).unwrap() <= add_error(&est, &gt, &pts).unwrap());
    }
}
