//! `blockasm` command-line tool.
//!
//! Exit codes: 0 success, 1 domain failure, 2 input or I/O failure.

mod formats;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use blockasm::blocks::BlockLibrary;
use blockasm::config::Config;
use blockasm::metrics::{build_recall_table, RecordsFile, Thresholds};
use blockasm::planner::{compile_assembly, PlannerContext};
use blockasm::simulation::{
    calibrate_noise, generate_scene, perceive_with, run_batch, NoiseCalibrationTarget, PerceptionSamples,
    SceneSettings,
};
use blockasm::structure::{validate_plan, StructurePlan};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use formats::{obj_mesh, scene_groups, SceneFile, TraceFile};

#[derive(Parser)]
#[command(name = "blockasm", version, about = "Block-assembly planning and simulation")]
struct Cli {
    /// JSON config file; omitted fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a structure plan for unknown models, overlaps, support and sequence defects.
    Validate { plan: PathBuf },
    /// Compile a plan against a scene and write the action trace.
    Plan {
        plan: PathBuf,
        scene: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        no_calibration: bool,
    },
    /// Run seeded assembly trials and write JSON and CSV reports.
    Simulate {
        /// Plan files; the four bundled structures when omitted.
        plans: Vec<PathBuf>,
        #[arg(long, default_value_t = 15)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        no_calibration: bool,
        #[arg(long, default_value = "simulation")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Score pose records and print the recall table.
    Metrics {
        records: PathBuf,
        /// Write the CSV table here instead of printing it.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Export block and gripper boxes of a scene or trace as an OBJ mesh.
    ExportScene {
        input: PathBuf,
        /// Step count for traces: a number or `final`.
        #[arg(long, default_value = "0")]
        at: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a random initial scene holding one block per plan entry.
    GenerateScene {
        plan: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Add noisy perception estimates drawn from the configured noise model.
        #[arg(long)]
        perceive: bool,
        out: PathBuf,
    },
    /// Search perception sigmas that reproduce the target recalls.
    NoiseSearch {
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write synthetic pose records drawn from the configured noise model.
    SynthRecords {
        #[arg(long, default_value_t = 10_000)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        out: PathBuf,
    },
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Domain(String),
    Input(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

type CmdResult = Result<(), Failure>;

/// Joins the error chain, skipping causes already quoted by their parent.
fn error_chain(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if out.ends_with(&text) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&text);
    }
    out
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn load_config(path: Option<&Path>) -> anyhow::Result<Config> {
    match path {
        Some(p) => Config::from_json(&read(p)?).with_context(|| format!("in {}", p.display())),
        None => Ok(Config::default()),
    }
}

fn load_plan(path: &Path) -> anyhow::Result<StructurePlan> {
    StructurePlan::from_json(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn cmd_validate(plan: &Path) -> CmdResult {
    let plan = load_plan(plan)?;
    let report = validate_plan(&plan, &BlockLibrary::standard());
    if report.is_valid() {
        println!("{}: valid ({} entries)", plan.name, plan.len());
        return Ok(());
    }
    for f in &report.findings {
        println!("{f}");
    }
    Err(Failure::Domain(format!("{}: {} finding(s)", plan.name, report.findings.len())))
}

fn cmd_plan(cfg: &Config, plan: &Path, scene: &Path, out: Option<&Path>) -> CmdResult {
    let plan = load_plan(plan)?;
    let scene: SceneFile = serde_json::from_str(&read(scene)?).context("scene parse error")?;
    if scene.format_version != blockasm::config::FORMAT_VERSION {
        return Err(Failure::Input(anyhow::anyhow!(
            "unsupported scene format_version {} (expected 1)",
            scene.format_version
        )));
    }
    let library = BlockLibrary::standard();
    let anchor_model = library
        .get(&plan.entries[0].model)
        .ok_or_else(|| Failure::Domain(format!("unknown model id `{}`", plan.entries[0].model)))?;
    let estimates = scene.estimates();
    if estimates.len() != scene.blocks.len() {
        return Err(Failure::Input(anyhow::anyhow!("scene has {} blocks but {} estimates", scene.blocks.len(), estimates.len())));
    }
    let ctx = PlannerContext::from_config(cfg);
    let steps = compile_assembly(&plan, &library, &scene.blocks, &estimates, &ctx, &cfg.anchor_pose(anchor_model))
        .map_err(|e| Failure::Domain(e.to_string()))?;
    let trace = TraceFile {
        format_version: blockasm::config::FORMAT_VERSION,
        structure: plan.name.clone(),
        calibration_enabled: cfg.calibration_enabled,
        scene: scene.blocks,
        steps,
    };
    let text = serde_json::to_string_pretty(&trace).context("trace serialization")?;
    match out {
        Some(p) => write(p, &text)?,
        None => println!("{text}"),
    }
    let actions: usize = trace.steps.iter().map(|s| s.actions.len()).sum();
    eprintln!("{}: {} steps, {} actions", trace.structure, trace.steps.len(), actions);
    Ok(())
}

fn cmd_simulate(cfg: &Config, plans: &[PathBuf], trials: usize, out: &Path, jobs: usize) -> CmdResult {
    if trials == 0 {
        return Err(Failure::Input(anyhow::anyhow!("--trials must be at least 1")));
    }
    let plans = if plans.is_empty() {
        StructurePlan::bundled()
    } else {
        plans.iter().map(|p| load_plan(p)).collect::<anyhow::Result<Vec<_>>>()?
    };
    let library = BlockLibrary::standard();
    let report = run_batch(&plans, &library, cfg, trials, cfg.seed, jobs);
    let csv = report.stats.to_csv();
    write(&out.join("report.csv"), &csv)?;
    write(&out.join("report.json"), &report.to_json())?;
    print!("{csv}");
    Ok(())
}

fn cmd_metrics(records: &Path, csv: Option<&Path>) -> CmdResult {
    let file = RecordsFile::from_json(&read(records)?)
        .map_err(|e| Failure::Input(anyhow::anyhow!("{e}")))?;
    if file.records.is_empty() {
        return Err(Failure::Domain("no records".into()));
    }
    let table = build_recall_table(&file.records, &BlockLibrary::standard(), &Thresholds::default())
        .map_err(|e| Failure::Domain(e.to_string()))?;
    print!("{}", table.to_text());
    match csv {
        Some(p) => write(p, &table.to_csv())?,
        None => print!("\n{}", table.to_csv()),
    }
    Ok(())
}

fn cmd_export(cfg: &Config, input: &Path, at: &str, out: Option<&Path>) -> CmdResult {
    let text = read(input)?;
    let value: serde_json::Value = serde_json::from_str(&text).context("parse error")?;
    let library = BlockLibrary::standard();
    let (blocks, fingers) = if value.get("steps").is_some() {
        let trace: TraceFile = serde_json::from_value(value).context("trace parse error")?;
        let k = match at {
            "final" => trace.steps.len(),
            n => n
                .parse::<usize>()
                .map_err(|_| Failure::Input(anyhow::anyhow!("--at expects a step number or `final`")))?,
        };
        if k > trace.steps.len() {
            return Err(Failure::Domain(format!("step {k} out of range (trace has {} steps)", trace.steps.len())));
        }
        let fingers = k.checked_sub(1).and_then(|last| {
            let step = &trace.steps[last];
            step.actions.last()?.grasp()?.finger_obbs(&step.target, &cfg.gripper())
        });
        (trace.blocks_at(k), fingers)
    } else {
        let scene: SceneFile = serde_json::from_value(value).context("scene parse error")?;
        if !matches!(at, "0" | "final") {
            return Err(Failure::Domain(format!("step {at} out of range (a scene has only step 0)")));
        }
        (scene.blocks, None)
    };
    let groups = scene_groups(&blocks, &library, fingers).map_err(Failure::Domain)?;
    let mesh = obj_mesh(&groups);
    match out {
        Some(p) => write(p, &mesh)?,
        None => print!("{mesh}"),
    }
    Ok(())
}

fn cmd_generate_scene(cfg: &Config, plan: &Path, seed: u64, perceive: bool, out: &Path) -> CmdResult {
    let plan = load_plan(plan)?;
    let library = BlockLibrary::standard();
    let models: Vec<String> = plan.entries.iter().map(|e| e.model.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks = generate_scene(&library, &models, &SceneSettings::from_config(cfg), &mut rng)
        .map_err(|e| Failure::Domain(e.to_string()))?;
    let mut scene = SceneFile::new(blocks);
    if perceive {
        scene.estimates = Some(perceive_with(&scene.blocks, &cfg.noise(), &mut rng));
    }
    write(out, &serde_json::to_string_pretty(&scene).context("scene serialization")?)?;
    Ok(())
}

fn cmd_noise_search(samples: usize, seed: u64) -> CmdResult {
    let target = NoiseCalibrationTarget {
        samples,
        ..NoiseCalibrationTarget::default()
    };
    let cal = calibrate_noise(&BlockLibrary::standard(), &target, seed);
    println!("{}", serde_json::to_string_pretty(&cal).context("serialization")?);
    Ok(())
}

fn cmd_synth_records(cfg: &Config, count: usize, seed: u64, out: &Path) -> CmdResult {
    let library = BlockLibrary::standard();
    let samples = PerceptionSamples::new(&library, count, cfg.gross_error_prob, seed);
    let file = RecordsFile::new(samples.records(&cfg.noise()));
    write(out, &file.to_json())?;
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    let mut cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Validate { plan } => cmd_validate(&plan),
        Command::Plan {
            plan,
            scene,
            out,
            no_calibration,
        } => {
            cfg.calibration_enabled &= !no_calibration;
            cmd_plan(&cfg, &plan, &scene, out.as_deref())
        }
        Command::Simulate {
            plans,
            trials,
            seed,
            no_calibration,
            out,
            jobs,
        } => {
            cfg.calibration_enabled &= !no_calibration;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cmd_simulate(&cfg, &plans, trials, &out, jobs)
        }
        Command::Metrics { records, csv } => cmd_metrics(&records, csv.as_deref()),
        Command::ExportScene { input, at, out } => cmd_export(&cfg, &input, &at, out.as_deref()),
        Command::GenerateScene {
            plan,
            seed,
            perceive,
            out,
        } => cmd_generate_scene(&cfg, &plan, seed, perceive, &out),
        Command::NoiseSearch { samples, seed } => cmd_noise_search(samples, seed),
        Command::SynthRecords { count, seed, out } => cmd_synth_records(&cfg, count, seed, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {}", error_chain(&e));
            ExitCode::from(2)
        }
    }
}
