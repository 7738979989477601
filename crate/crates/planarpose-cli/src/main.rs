//! `planarpose`: pose estimation and Monte Carlo noise studies from
//! scenario files.
//!
//! Exit codes: 0 success, 1 input/validation problem, 2 numerical or
//! solver failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use planarpose::attitude::{
    euler_from_rotation, rotation_from_euler, EulerAngles, GimbalConfig,
};
use planarpose::frames::{self, FramePose};
use planarpose::geometry::{Mat3, Pose, RotationMatrix};
use planarpose::p4p::{solve_p4p, ObservationSet};
use planarpose::refine::{objective, refine, RefineOptions};
use planarpose::report::{
    csv_document, fmt_float, ResultRecord, RunMetadata, SimulationRow, SweepCsvRow,
    SIMULATE_HEADER, SOLVE_HEADER, SWEEP_HEADER,
};
use planarpose::scenario::{parse_snr_list, LoadedScenario, ScenarioError, ScenarioFile};
use planarpose::simulation::{
    add_awgn, monte_carlo, snr_sweep, synth_observations, trial_rng, Method,
};
use planarpose::Error as SolveError;

#[derive(Parser)]
#[command(name = "planarpose", version, about = "Camera pose from coplanar fiducial points")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Override the scenario file's noise seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a pose from a scenario's observations (or synthesized ones).
    Solve(SolveArgs),
    /// Monte Carlo translation statistics, analytic vs refined.
    Simulate(ScenarioArg),
    /// Paired Monte Carlo across a list of SNR levels.
    Sweep(SweepArgs),
    /// Convert between attitude angles and a rotation matrix.
    Euler(EulerArgs),
}

#[derive(Args)]
struct ScenarioArg {
    /// Scenario TOML file.
    scenario: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    /// Scenario TOML file.
    scenario: PathBuf,
    /// Generate observations from the scenario's pose instead of reading
    /// them from the file.
    #[arg(long)]
    synthesize: bool,
    /// Noise level for synthesized observations (default: noiseless).
    #[arg(long, requires = "synthesize")]
    snr_db: Option<f64>,
    /// Refine the analytic pose by Levenberg-Marquardt.
    #[arg(long)]
    refine: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Scenario TOML file (its snr_db is ignored).
    scenario: PathBuf,
    /// SNR levels: `15:24:1` (inclusive range) or `15,18,21`.
    #[arg(long)]
    snr_list: String,
}

#[derive(Args)]
struct EulerArgs {
    /// Nine row-major rotation entries r11 r12 ... r33.
    #[arg(long, num_args = 9, value_name = "R", allow_hyphen_values = true)]
    matrix: Option<Vec<f64>>,
    /// Heading, pitch, roll in radians.
    #[arg(long, num_args = 3, value_name = "ANGLE", allow_hyphen_values = true)]
    angles: Option<Vec<f64>>,
    /// Gimbal-branch threshold on |r32|, in (0, 1).
    #[arg(long, default_value_t = 0.9999)]
    threshold: f64,
}

/// Failure classes mapped to exit codes.
enum CliError {
    /// Unreadable/invalid input: exit 1.
    Validation(String),
    /// Degenerate geometry or numerical failure: exit 2.
    Solver(String),
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::SingularMatrix
            | SolveError::PointBehindCamera { .. }
            | SolveError::DegenerateColumns
            | SolveError::CollinearFeatures
            | SolveError::CollinearPixels
            | SolveError::DegenerateDepthRatio
            | SolveError::DepthSign { .. }
            | SolveError::AllTrialsFailed(_) => CliError::Solver(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    // Usage errors are input errors: report them on exit code 1.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Keep clap's rendering (it includes --help/--version output).
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if is_help { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };

    let result = match &cli.command {
        Command::Solve(args) => cmd_solve(&cli, args),
        Command::Simulate(args) => cmd_simulate(&cli, args),
        Command::Sweep(args) => cmd_sweep(&cli, args),
        Command::Euler(args) => cmd_euler(&cli, args),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Solver(msg)) => {
            eprintln!("solver error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_scenario(path: &Path, seed_override: Option<u64>) -> CliResult<LoadedScenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let mut loaded = ScenarioFile::parse_str(&text)?.resolve()?;
    if let Some(seed) = seed_override {
        loaded.scenario.seed = seed;
    }
    Ok(loaded)
}

fn emit(cli: &Cli, text: &str) -> CliResult<()> {
    match &cli.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json_document(key: &str, rows: serde_json::Value) -> String {
    let doc = serde_json::json!({
        "metadata": RunMetadata::current(),
        key: rows,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("serializable");
    text.push('\n');
    text
}

fn cmd_solve(cli: &Cli, args: &SolveArgs) -> CliResult<()> {
    let loaded = load_scenario(&args.scenario, cli.seed)?;
    let scenario = &loaded.scenario;

    let observations: ObservationSet = if args.synthesize {
        let noiseless = synth_observations(scenario)?;
        let snr_db = args.snr_db.unwrap_or(f64::INFINITY);
        if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
            return Err(CliError::Validation("snr_db must be finite or +inf".into()));
        }
        add_awgn(&noiseless, snr_db, &mut trial_rng(scenario.seed, 0))
    } else {
        loaded.observations.clone().ok_or_else(|| {
            CliError::Validation(
                "scenario has no [observations]; pass --synthesize to generate them".into(),
            )
        })?
    };

    let analytic = solve_p4p(&scenario.target, &observations, &scenario.intrinsics)?;
    let objective_p4p = objective(&analytic, &scenario.target, &observations, &scenario.intrinsics)?;

    let (method, pose, objective_final, iterations, converged) = if args.refine {
        let report = refine(
            &analytic,
            &scenario.target,
            &observations,
            &scenario.intrinsics,
            &RefineOptions::default(),
        )?;
        ("refined", report.pose, report.final_objective, report.iterations, report.converged)
    } else {
        ("p4p", analytic, objective_p4p, 0, true)
    };

    let gimbal = GimbalConfig::default();
    let mut records = vec![ResultRecord::new(
        method,
        &pose,
        &euler_from_rotation(&pose.rotation, &gimbal),
        objective_p4p,
        objective_final,
        iterations,
        converged,
    )];

    // With a world extrinsic on file, also report the vehicle in the world
    // frame (camera extrinsic defaults to identity).
    if let Some(landmark_in_world) = &loaded.landmark_in_world {
        let landmark_in_camera = FramePose::new(frames::LANDMARK, frames::CAMERA, pose)
            .expect("labels differ");
        let vehicle_in_camera = match &loaded.vehicle_in_camera {
            Some(fp) => fp.clone(),
            None => FramePose::new(frames::VEHICLE, frames::CAMERA, Pose::IDENTITY)
                .expect("labels differ"),
        };
        let vehicle_in_world =
            frames::agv_pose_in_world(landmark_in_world, &landmark_in_camera, &vehicle_in_camera)?;
        records.push(ResultRecord::new(
            "vehicle_in_world",
            &vehicle_in_world.pose,
            &euler_from_rotation(&vehicle_in_world.pose.rotation, &gimbal),
            objective_p4p,
            objective_final,
            iterations,
            converged,
        ));
    }

    let text = match cli.format {
        Format::Csv => csv_document(SOLVE_HEADER, records.iter().map(|r| r.csv_row())),
        Format::Json => json_document("records", serde_json::to_value(&records).expect("ser")),
    };
    emit(cli, &text)
}

fn cmd_simulate(cli: &Cli, args: &ScenarioArg) -> CliResult<()> {
    let loaded = load_scenario(&args.scenario, cli.seed)?;
    let scenario = &loaded.scenario;

    let rows = vec![
        SimulationRow::new("p4p", &monte_carlo(scenario, Method::P4p)?, scenario),
        SimulationRow::new("refined", &monte_carlo(scenario, Method::Refined)?, scenario),
    ];

    let text = match cli.format {
        Format::Csv => csv_document(SIMULATE_HEADER, rows.iter().map(|r| r.csv_row())),
        Format::Json => json_document("rows", serde_json::to_value(&rows).expect("ser")),
    };
    emit(cli, &text)
}

fn cmd_sweep(cli: &Cli, args: &SweepArgs) -> CliResult<()> {
    let snr_list = parse_snr_list(&args.snr_list)
        .map_err(|_| CliError::Validation("--snr-list must be a nonempty increasing list".into()))?;
    let loaded = load_scenario(&args.scenario, cli.seed)?;
    let scenario = &loaded.scenario;

    let result = snr_sweep(scenario, &snr_list)?;
    let rows = SweepCsvRow::from_sweep(&result, scenario.trials, scenario.seed);

    let text = match cli.format {
        Format::Csv => csv_document(SWEEP_HEADER, rows.iter().map(|r| r.csv_row())),
        Format::Json => json_document("rows", serde_json::to_value(&rows).expect("ser")),
    };
    emit(cli, &text)
}

fn cmd_euler(cli: &Cli, args: &EulerArgs) -> CliResult<()> {
    if !(args.threshold > 0.0 && args.threshold < 1.0) {
        return Err(CliError::Validation("--threshold must be in (0, 1)".into()));
    }
    let cfg = GimbalConfig { threshold: args.threshold };

    let text = match (&args.matrix, &args.angles) {
        (Some(entries), None) => {
            let mut m = [0.0; 9];
            m.copy_from_slice(entries);
            let rotation = RotationMatrix::from_nearly(Mat3(m), 1e-6).map_err(|_| {
                CliError::Validation(format!(
                    "matrix is not a rotation (orthogonality drift {:.3e} exceeds 1e-6)",
                    Mat3(m).orthogonality_drift()
                ))
            })?;
            let e = euler_from_rotation(&rotation, &cfg);
            match cli.format {
                Format::Csv => csv_document(
                    "heading,pitch,roll",
                    [format!("{},{},{}", fmt_float(e.heading), fmt_float(e.pitch), fmt_float(e.roll))],
                ),
                Format::Json => json_document(
                    "angles",
                    serde_json::json!({ "heading": e.heading, "pitch": e.pitch, "roll": e.roll }),
                ),
            }
        }
        (None, Some(angles)) => {
            let e = EulerAngles::new(angles[0], angles[1], angles[2]);
            if !(e.heading.is_finite() && e.pitch.is_finite() && e.roll.is_finite()) {
                return Err(CliError::Validation("angles must be finite".into()));
            }
            let m = *rotation_from_euler(&e).matrix();
            match cli.format {
                Format::Csv => csv_document(
                    "r11,r12,r13,r21,r22,r23,r31,r32,r33",
                    [m.0.iter().map(|v| fmt_float(*v)).collect::<Vec<_>>().join(",")],
                ),
                Format::Json => {
                    let mut map = serde_json::Map::new();
                    for (i, v) in m.0.iter().enumerate() {
                        let name = format!("r{}{}", i / 3 + 1, i % 3 + 1);
                        map.insert(name, serde_json::json!(v));
                    }
                    json_document("matrix", serde_json::Value::Object(map))
                }
            }
        }
        _ => {
            return Err(CliError::Validation(
                "pass exactly one of --matrix or --angles".into(),
            ))
        }
    };
    emit(cli, &text)
}
