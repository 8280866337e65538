use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use blockasm::metrics::{PoseRecord, RecordsFile};
use blockasm::Pose;
use nalgebra::Vector3;
use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_blockasm"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn blockasm")
}

fn bundled(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data/plans")
        .join(format!("{name}.json"))
        .to_string_lossy()
        .into_owned()
}

fn write_json(dir: &TempDir, name: &str, value: &Value) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn block(model: &str, t: [f64; 3]) -> Value {
    json!({"model": model, "pose": {"rotation": [1, 0, 0, 0, 1, 0, 0, 0, 1], "translation": t}})
}

fn generated_scene(dir: &TempDir, plan: &str, seed: u64) -> String {
    let out = dir.path().join(format!("scene_{seed}.json"));
    let status = run(&["generate-scene", plan, "--seed", &seed.to_string(), path_str(&out)]);
    assert!(status.status.success(), "{}", stderr(&status));
    out.to_string_lossy().into_owned()
}

#[test]
fn validate_exit_codes() {
    for name in ["structure1", "structure2", "structure3", "structure4"] {
        let out = run(&["validate", &bundled(name)]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", stderr(&out));
    }

    let dir = TempDir::new().unwrap();
    let overlapping = json!({
        "format_version": 1,
        "name": "overlap",
        "entries": [
            {"model": "plate", "rotation": [1, 0, 0, 0, 1, 0, 0, 0, 1], "translation": [0, 0, 0]},
            {"model": "cube", "rotation": [1, 0, 0, 0, 1, 0, 0, 0, 1], "translation": [0, 0, 0.02]}
        ],
        "sequence": [0, 1]
    });
    let out = run(&["validate", &write_json(&dir, "overlap.json", &overlapping)]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));

    let truncated = dir.path().join("truncated.json");
    std::fs::write(&truncated, "{\"format_version\": 1,").unwrap();
    let out = run(&["validate", path_str(&truncated)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("parse"), "{}", stderr(&out));
}

#[test]
fn plan_writes_one_insert_per_block() {
    let dir = TempDir::new().unwrap();
    let plan = bundled("structure3");
    let scene = generated_scene(&dir, &plan, 5);
    let trace_path = dir.path().join("trace.json");
    let out = run(&["plan", &plan, &scene, "--out", path_str(&trace_path)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let trace: Value = serde_json::from_str(&std::fs::read_to_string(&trace_path).unwrap()).unwrap();
    assert_eq!(trace["format_version"], 1);
    let steps = trace["steps"].as_array().unwrap();
    for step in steps {
        let kinds: Vec<&str> = step["actions"]
            .as_array()
            .unwrap()
            .iter()
            .map(|a| a["kind"].as_str().unwrap())
            .collect();
        assert_eq!(kinds.iter().filter(|k| **k == "insert").count(), 1, "{kinds:?}");
        assert_eq!(kinds.last(), Some(&"insert"));
        assert!(kinds.contains(&"calibrate"));
    }
    let entries: Value = serde_json::from_str(&std::fs::read_to_string(&plan).unwrap()).unwrap();
    assert_eq!(steps.len(), entries["entries"].as_array().unwrap().len());
}

#[test]
fn plan_without_calibration_has_no_calibrate_action() {
    let dir = TempDir::new().unwrap();
    let plan = bundled("structure1");
    let scene = generated_scene(&dir, &plan, 2);
    let out = run(&["plan", &plan, &scene, "--no-calibration"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let trace: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(trace["calibration_enabled"], false);
    let text = serde_json::to_string(&trace["steps"]).unwrap();
    assert!(!text.contains("\"calibrate\""));
}

#[test]
fn plan_reports_boxed_in_block() {
    let dir = TempDir::new().unwrap();
    let plan = json!({
        "format_version": 1,
        "name": "single",
        "entries": [{"model": "cube", "rotation": [1, 0, 0, 0, 1, 0, 0, 0, 1], "translation": [0, 0, 0]}],
        "sequence": [0]
    });
    let scene = json!({
        "format_version": 1,
        "blocks": [
            block("plate", [0.0, 0.0, 0.055]),
            block("brick", [0.061, 0.0, 0.015]),
            block("short_brick", [-0.051, 0.0, 0.015]),
            block("cube", [0.0, 0.0, 0.02])
        ]
    });
    let out = run(&[
        "plan",
        &write_json(&dir, "plan.json", &plan),
        &write_json(&dir, "scene.json", &scene),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("`cube`"), "{}", stderr(&out));
}

#[test]
fn simulate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let csv = |name: &str| -> String {
        let out_dir: PathBuf = dir.path().join(name);
        let out = run(&["simulate", "--trials", "3", "--seed", "9", "--out", path_str(&out_dir)]);
        assert!(out.status.success(), "{}", stderr(&out));
        let report: Value =
            serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
        assert_eq!(report["format_version"], 1);
        std::fs::read_to_string(out_dir.join("report.csv")).unwrap()
    };
    let first = csv("a");
    assert_eq!(first, csv("b"));
    let lines: Vec<&str> = first.lines().collect();
    assert_eq!(lines.len(), 6, "{first}");
    assert!(lines[0].starts_with("structure,"));
    assert!(lines[5].starts_with("mean,"));
}

fn records_file(dir: &TempDir, records: Vec<PoseRecord>) -> String {
    let path = dir.path().join("records.json");
    std::fs::write(&path, RecordsFile::new(records).to_json()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn metrics_perfect_empty_and_unknown() {
    let dir = TempDir::new().unwrap();
    let pose = Pose::from_parts_unchecked(nalgebra::Matrix3::identity(), Vector3::new(0.1, 0.0, 0.02));
    let perfect = records_file(
        &dir,
        vec![PoseRecord {
            object: "brick".into(),
            estimated: pose,
            ground_truth: pose,
        }],
    );
    let out = run(&["metrics", &perfect]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8_lossy(&out.stdout);
    let row = text.lines().find(|l| l.starts_with("brick")).unwrap();
    assert_eq!(row.matches("100.00").count(), 5, "{row}");

    let csv_path = dir.path().join("table.csv");
    let out = run(&["metrics", &perfect, "--csv", path_str(&csv_path)]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("object,count,"));
    assert!(csv.lines().last().unwrap().starts_with("mean,"));

    let empty = records_file(&dir, Vec::new());
    let out = run(&["metrics", &empty]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("no records"));

    let unknown = records_file(
        &dir,
        vec![PoseRecord {
            object: "teapot".into(),
            estimated: pose,
            ground_truth: pose,
        }],
    );
    let out = run(&["metrics", &unknown]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("teapot"));
}

fn count_prefix(text: &str, prefix: &str) -> usize {
    text.lines().filter(|l| l.starts_with(prefix)).count()
}

#[test]
fn export_scene_and_trace() {
    let dir = TempDir::new().unwrap();
    let plan = bundled("structure2");
    let scene = generated_scene(&dir, &plan, 1);
    let out = run(&["export-scene", &scene]);
    assert!(out.status.success(), "{}", stderr(&out));
    let mesh = String::from_utf8_lossy(&out.stdout).into_owned();
    let scene_json: Value = serde_json::from_str(&std::fs::read_to_string(&scene).unwrap()).unwrap();
    let blocks = scene_json["blocks"].as_array().unwrap().len();
    assert_eq!(count_prefix(&mesh, "g "), blocks);
    let boxes = count_prefix(&mesh, "v ") / 8;
    assert_eq!(count_prefix(&mesh, "v "), 8 * boxes);
    assert_eq!(count_prefix(&mesh, "f "), 12 * boxes);

    let trace = dir.path().join("trace.json");
    assert!(run(&["plan", &plan, &scene, "--out", path_str(&trace)]).status.success());
    let obj = dir.path().join("final.obj");
    let out = run(&["export-scene", path_str(&trace), "--at", "final", "--out", path_str(&obj)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let mesh = std::fs::read_to_string(&obj).unwrap();
    assert_eq!(count_prefix(&mesh, "g block_"), blocks);
    assert_eq!(count_prefix(&mesh, "g gripper"), 1);

    let out = run(&["export-scene", path_str(&trace), "--at", "99"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn synthetic_records_hit_the_calibrated_recall() {
    let dir = TempDir::new().unwrap();
    let records = dir.path().join("records.json");
    let out = run(&["synth-records", "--count", "10000", "--seed", "3", path_str(&records)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv_path = dir.path().join("table.csv");
    let out = run(&["metrics", path_str(&records), "--csv", path_str(&csv_path)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mean: Vec<&str> = csv.lines().last().unwrap().split(',').collect();
    let recall_2cm: f64 = mean.last().unwrap().parse().unwrap();
    assert!((recall_2cm - 0.907).abs() <= 0.02, "{recall_2cm}");
}
