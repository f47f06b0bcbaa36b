//! The `craterloc` command line: scene, detect, traverse and eval.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::cloud::ply::{read_ply, write_ply, PlyFormat};
use crate::config::PipelineConfig;
use crate::detection::{CraterDetection, Method};
use crate::error::{Error, Result};
use crate::eval::{emit_report, run_sweep, trial_scene, trial_seed, ReportFormat, SweepGrid};
use crate::landmarks::{db_from_scene, read_jsonl, write_jsonl, LandmarkDb};
use crate::lidar::detect_lidar;
use crate::localizer::{read_route, route_length, run_traverse, write_route, RoverState, TraverseWorld};
use crate::pose::Pose2;
use crate::sensor::{read_disparity, simulate_lidar, simulate_stereo, write_disparity};
use crate::stereo::detect_stereo;
use crate::terrain::io::{read_json, write_json, write_scene, TruthFile, TRUTH_JSON};

pub const LIDAR_PLY: &str = "lidar.ply";
pub const DISPARITY_RAW: &str = "disparity.f32";
pub const LANDMARKS_JSONL: &str = "landmarks.jsonl";
pub const DETECTIONS_JSON: &str = "detections.json";
pub const MANIFEST_JSON: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(name = "craterloc", version, about = "Crater landmark detection and rover localization experiments")]
pub struct Cli {
    /// JSON file overriding any subset of the pipeline thresholds
    /// (see `craterloc config` for the full document with defaults).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "CRATERLOC_OUT", default_value = "craterloc-out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a single-crater scene and simulate both sensors on it.
    Scene(SceneArgs),
    /// Detect craters in a LIDAR PLY or a disparity raster.
    Detect(DetectArgs),
    /// Drive a route with dead reckoning and crater fixes.
    Traverse(TraverseArgs),
    /// Run a detection sweep and write the KPP report.
    Eval(EvalArgs),
    /// Print the default configuration document.
    Config,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Lidar,
    Stereo,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Lidar => Method::Lidar,
            MethodArg::Stereo => Method::Stereo,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
    All,
}

#[derive(Debug, Args)]
pub struct SceneArgs {
    /// Crater diameter (m).
    #[arg(long, required_unless_present = "preset")]
    pub diameter: Option<f64>,
    /// Distance from the rover to the crater's near rim (m).
    #[arg(long, required_unless_present = "preset")]
    pub range: Option<f64>,
    /// Approach direction (degrees, site frame).
    #[arg(long, default_value_t = 0.0)]
    pub approach: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write a manifest of every scene in a named sweep instead of one scene.
    #[arg(long, conflicts_with_all = ["diameter", "range"])]
    pub preset: Option<String>,
    /// Skip sensor simulation.
    #[arg(long)]
    pub no_sensors: bool,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// LIDAR PLY (sensor frame) or disparity raster with a JSON sidecar.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "lidar")]
    pub method: MethodArg,
    /// Landmark database (JSON lines); required for LIDAR.
    #[arg(long)]
    pub db: Option<PathBuf>,
    /// Rover pose as x,y,heading_deg. Defaults to truth.json beside the input.
    #[arg(long, value_parser = parse_pose, allow_hyphen_values = true)]
    pub pose: Option<Pose2>,
    /// One-sigma uncertainty of the pose position (m).
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
}

#[derive(Debug, Args)]
pub struct TraverseArgs {
    /// Route file: JSON list of [x, y] waypoints. Defaults to a straight
    /// route of --length metres along +x.
    #[arg(long)]
    pub route: Option<PathBuf>,
    #[arg(long, default_value_t = 500.0)]
    pub length: f64,
    /// Dead-reckoning drift as a fraction of distance travelled.
    #[arg(long)]
    pub drift: Option<f64>,
    #[arg(long, value_enum, default_value = "lidar")]
    pub method: MethodArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Independent runs, seeded seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    pub runs: u64,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_enum, default_value = "lidar")]
    pub detector: MethodArg,
    #[arg(long, default_value = "kpp")]
    pub preset: String,
    /// Trials per (diameter, range) cell.
    #[arg(long, default_value_t = 40)]
    pub seeds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "all")]
    pub format: FormatArg,
}

fn parse_pose(s: &str) -> std::result::Result<Pose2, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match v[..] {
        [x, y, h] if v.iter().all(|c| c.is_finite()) => Ok(Pose2::new(x, y, h.to_radians())),
        _ => Err("expected x,y,heading_deg".into()),
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Runs a parsed command and returns the lines to print.
pub fn execute(cli: &Cli) -> Result<Vec<String>> {
    let cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let out = &cli.out;
    match &cli.command {
        Command::Scene(a) => cmd_scene(a, &cfg, out),
        Command::Detect(a) => cmd_detect(a, &cfg, out),
        Command::Traverse(a) => cmd_traverse(a, &cfg, out),
        Command::Eval(a) => cmd_eval(a, &cfg, out),
        Command::Config => Ok(vec![cfg.to_json_pretty()]),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

#[derive(Debug, Serialize)]
struct ManifestEntry {
    diameter_m: f64,
    range_m: f64,
    approach_deg: f64,
    seed: u64,
}

pub fn cmd_scene(a: &SceneArgs, cfg: &PipelineConfig, out: &Path) -> Result<Vec<String>> {
    create_dir(out)?;
    if let Some(name) = &a.preset {
        // one entry per (diameter, range, approach)
        let grid = SweepGrid::preset(name, 1)?;
        let mut entries = Vec::new();
        for (c, (d, r)) in grid.cells().enumerate() {
            for (k, &approach) in grid.approach_deg.iter().enumerate() {
                entries.push(ManifestEntry {
                    diameter_m: d,
                    range_m: r,
                    approach_deg: approach,
                    seed: trial_seed(a.seed, c, k),
                });
            }
        }
        let path = out.join(MANIFEST_JSON);
        write_json(&path, &entries)?;
        return Ok(vec![format!("{} scenes in {}", entries.len(), path.display())]);
    }
    let (d, r) = (a.diameter.expect("clap enforces"), a.range.expect("clap enforces"));
    let sweep = cfg.sweep_config();
    let scene = trial_scene(d, r, a.approach, a.seed, &sweep)?;
    write_scene(out, &scene)?;
    write_jsonl(&out.join(LANDMARKS_JSONL), &db_from_scene(&scene, cfg.scene.map_sigma_m, a.seed))?;
    let mut lines = vec![format!(
        "scene {}x{} cells, crater D={d} m at {r} m, seed {}",
        scene.heightfield.n_cols, scene.heightfield.n_rows, a.seed
    )];
    if !a.no_sensors {
        let cloud = simulate_lidar(&scene, &cfg.lidar, a.seed)?;
        write_ply(&out.join(LIDAR_PLY), &cloud, PlyFormat::BinaryLittleEndian)?;
        let (dmap, _) = simulate_stereo(&scene, &cfg.stereo, a.seed)?;
        write_disparity(&out.join(DISPARITY_RAW), &dmap)?;
        lines.push(format!("{} LIDAR returns, {} valid disparities", cloud.len(), dmap.valid_count()));
    }
    lines.push(format!("wrote {}", out.display()));
    Ok(lines)
}

fn is_ply(path: &Path) -> bool {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("ply")) {
        return true;
    }
    let mut magic = [0u8; 4];
    std::fs::File::open(path)
        .and_then(|mut f| std::io::Read::read_exact(&mut f, &mut magic))
        .is_ok()
        && &magic[..3] == b"ply"
}

fn input_pose(a: &DetectArgs) -> Result<Pose2> {
    if let Some(p) = a.pose {
        return Ok(p);
    }
    let truth = a.input.parent().unwrap_or(Path::new(".")).join(TRUTH_JSON);
    if !truth.exists() {
        return Err(Error::InvalidConfig(format!(
            "no --pose given and no {} beside the input",
            truth.display()
        )));
    }
    let t: TruthFile = read_json(&truth)?;
    Ok(t.rover_pose)
}

pub fn cmd_detect(a: &DetectArgs, cfg: &PipelineConfig, out: &Path) -> Result<Vec<String>> {
    let pose = input_pose(a)?;
    let dets: Vec<CraterDetection> = match a.method {
        MethodArg::Lidar => {
            let db = match &a.db {
                Some(p) => read_jsonl(p)?,
                None => LandmarkDb::empty(),
            };
            let cloud = read_ply(&a.input)?;
            let prior = RoverState::new(pose.position(), pose.heading, a.sigma);
            detect_lidar(&cloud, &prior, &db, &cfg.lidar_detector)?
        }
        MethodArg::Stereo => {
            if is_ply(&a.input) {
                return Err(Error::InvalidConfig(format!(
                    "{} is a point cloud; stereo detection needs a disparity raster (raw f32) with its JSON sidecar, as written by `craterloc scene`",
                    a.input.display()
                )));
            }
            let dmap = read_disparity(&a.input)?;
            detect_stereo(&dmap, &pose, &cfg.stereo_detector)?
        }
    };
    create_dir(out)?;
    let path = out.join(DETECTIONS_JSON);
    write_json(&path, &dets)?;
    let mut lines: Vec<String> = dets
        .iter()
        .map(|d| {
            format!(
                "crater at ({:.2}, {:.2}) D={:.1} m score {:.3}{}",
                d.center_xy[0],
                d.center_xy[1],
                d.diameter,
                d.score,
                d.landmark_id.map(|i| format!(" landmark {i}")).unwrap_or_default()
            )
        })
        .collect();
    lines.push(format!("{} detections written to {}", dets.len(), path.display()));
    Ok(lines)
}

#[derive(Debug, Serialize)]
struct TraverseSummary {
    seed: u64,
    route_length_m: f64,
    landmarks: usize,
    sensing_steps: usize,
    update_steps: usize,
    max_error_m: f64,
    max_three_sigma_m: f64,
    mean_nees: f64,
    step_failures: usize,
}

pub fn cmd_traverse(a: &TraverseArgs, cfg: &PipelineConfig, out: &Path) -> Result<Vec<String>> {
    let route = match &a.route {
        Some(p) => read_route(p)?,
        None => vec![[0.0, 0.0], [a.length, 0.0]],
    };
    let mut cfg = cfg.clone();
    if let Some(d) = a.drift {
        cfg.traverse.drift_fraction = d;
    }
    cfg.validate()?;
    let tcfg = cfg.traverse_config(a.method.into());
    create_dir(out)?;
    write_route(&out.join("route.json"), &route)?;
    let mut lines = Vec::new();
    let mut summaries = Vec::new();
    for seed in a.seed..a.seed + a.runs.max(1) {
        let t = &cfg.traverse;
        let mut world = TraverseWorld::along_route(&route, t.craters_per_100m, t.diameter_range_m, seed)?;
        world.cell_size_m = t.cell_size_m;
        world.roughness_m = cfg.scene.roughness_m;
        let db = world.landmark_db(cfg.scene.map_sigma_m, seed ^ 0xDB);
        write_jsonl(&out.join(format!("landmarks_{seed}.jsonl")), &db)?;
        let log = run_traverse(&world, &route, &tcfg, &db, seed)?;
        log.write_jsonl(&out.join(format!("traverse_{seed}.jsonl")))?;
        let nees: Vec<f64> = log.updates().filter_map(|s| s.nees()).collect();
        let s = TraverseSummary {
            seed,
            route_length_m: route_length(&route),
            landmarks: db.len(),
            sensing_steps: log.steps.iter().filter(|s| s.sensed).count(),
            update_steps: log.updates().count(),
            max_error_m: log.steps.iter().map(|s| s.error_xy()[0].hypot(s.error_xy()[1])).fold(0.0, f64::max),
            max_three_sigma_m: log.steps.iter().map(|s| s.three_sigma()).fold(0.0, f64::max),
            mean_nees: if nees.is_empty() { f64::NAN } else { nees.iter().sum::<f64>() / nees.len() as f64 },
            step_failures: log.steps.iter().filter(|s| s.error.is_some()).count(),
        };
        lines.push(format!(
            "seed {seed}: {} updates over {:.0} m, max error {:.2} m, max 3-sigma {:.2} m, mean NEES {:.2}",
            s.update_steps, s.route_length_m, s.max_error_m, s.max_three_sigma_m, s.mean_nees
        ));
        summaries.push(s);
    }
    write_json(&out.join("summary.json"), &summaries)?;
    lines.push(format!("wrote {}", out.display()));
    Ok(lines)
}

pub fn cmd_eval(a: &EvalArgs, cfg: &PipelineConfig, out: &Path) -> Result<Vec<String>> {
    let grid = SweepGrid::preset(&a.preset, a.seeds)?;
    let report = run_sweep(a.detector.into(), &grid, &cfg.sweep_config(), a.seed)?;
    let format = match a.format {
        FormatArg::Csv => ReportFormat::Csv,
        FormatArg::Json => ReportFormat::Json,
        FormatArg::All => ReportFormat::All,
    };
    let files = emit_report(&report, out, format)?;
    let mut lines: Vec<String> = report
        .diameters
        .iter()
        .map(|d| {
            format!(
                "D {:>4} m: 3-sigma {:.2} m over {} hits at {}-{} m{}",
                d.diameter_m,
                d.three_sigma_m,
                d.true_positives,
                report.sigma_ranges_m.0,
                report.sigma_ranges_m.1,
                d.reference_three_sigma_m.map(|r| format!(" (reference {r:.2})")).unwrap_or_default()
            )
        })
        .collect();
    lines.extend(files.iter().map(|f| format!("wrote {}", f.display())));
    Ok(lines)
}
