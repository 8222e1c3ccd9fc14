//! `ris-isac` command-line driver.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical error,
//! 4 capability error (e.g. SDR requested above the element cap).

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ris_isac::experiments::{self, ExperimentOptions, GridSpec, Method};
use ris_isac::perturbation::{design, LambdaPolicy};
use ris_isac::rng::seed_list;
use ris_isac::{Error, Scenario, ScenarioConfig};

const DEFAULT_SEEDS: usize = 20;
const DEFAULT_ALPHAS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
const DEFAULT_RATIOS: [f64; 7] = [0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0];
const DEFAULT_COMPLEXITY_N: [usize; 4] = [64, 128, 256, 512];
const SWEEP_ALPHA: f64 = 0.5;

#[derive(Parser)]
#[command(name = "ris-isac", version, about = "Closed-form RIS phase design for ISAC")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the proposed design once and print a summary.
    Solve(CommonArgs),
    /// Run one of the experiment drivers and write CSV output.
    Experiment {
        #[arg(value_enum)]
        name: ExperimentName,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Check a scenario file without running any solver.
    Validate {
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ExperimentName {
    Heatmap,
    AlphaSweep,
    WeightSweep,
    AoaScan,
    Complexity,
}

#[derive(Args, Clone, Serialize)]
struct CommonArgs {
    /// Scenario JSON; the built-in default layout when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Base seed; overrides the scenario's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of Monte Carlo seeds derived from the base seed.
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Comma-separated alpha values for the alpha sweep.
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    /// `adaptive` or `fixed:<c>` (lambda = c * sigma_max).
    #[arg(long)]
    lambda_policy: Option<String>,
    /// `proposed`, `sdr` or `comm-only` (heatmap only).
    #[arg(long)]
    method: Option<String>,
    #[arg(long, default_value_t = experiments::DEFAULT_SDR_CAP)]
    sdr_cap: usize,
}

#[derive(Serialize)]
struct RunManifest {
    tool_version: &'static str,
    command: String,
    argv: Vec<String>,
    scenario_path: Option<PathBuf>,
    resolved_config: ScenarioConfig,
    seeds: Vec<u64>,
    output_dir: PathBuf,
    parameters: serde_json::Value,
    outputs: Vec<String>,
    wall_time_seconds: Option<f64>,
}

impl RunManifest {
    fn write(&self, dir: &Path) -> Result<(), Error> {
        std::fs::create_dir_all(dir)?;
        let body = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(dir.join("manifest.json"), body + "\n")?;
        Ok(())
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config { .. } | Error::Io(_) | Error::DegenerateGeometry(_) => 2,
        Error::CapExceeded { .. } => 4,
        Error::Shape(_) | Error::Numerical(_) | Error::NonConvergence { .. } | Error::Infeasible { .. } => 3,
    }
}

/// Resolves flags over file over defaults.
fn resolve_config(common: &CommonArgs) -> Result<ScenarioConfig, Error> {
    let mut cfg = match &common.scenario {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default_layout(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(alpha) = common.alpha {
        cfg.alpha = alpha;
    }
    if let Some(policy) = &common.lambda_policy {
        cfg.lambda_policy = policy.parse()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn options(common: &CommonArgs, cfg: &ScenarioConfig) -> ExperimentOptions {
    let seeds = seed_list(cfg.seed, common.seeds.unwrap_or(DEFAULT_SEEDS));
    let mut opts = ExperimentOptions::with_seeds(seeds);
    opts.sdr_cap = common.sdr_cap;
    opts
}

fn cmd_validate(scenario: Option<&Path>) -> Result<(), Error> {
    let cfg = match scenario {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default_layout(),
    };
    cfg.validate()?;
    let s = Scenario::from_config(cfg)?;
    println!(
        "ok: N = {} ({}x{}), K = {}, alpha = {}, lambda policy {}",
        s.elements(),
        s.config.ris_rows,
        s.config.ris_cols,
        s.target_angles.len(),
        s.config.alpha,
        s.config.lambda_policy
    );
    Ok(())
}

fn cmd_solve(common: &CommonArgs) -> Result<(), Error> {
    let cfg = resolve_config(common)?;
    let scenario = Scenario::from_config(cfg)?;
    let channels = scenario.channels(scenario.config.seed);
    let d = design(
        &channels,
        &scenario.consts,
        &scenario.weights,
        scenario.alpha(),
        scenario.config.lambda_policy,
    )?;
    println!("gamma_db {:.4}", d.metrics.snr.db);
    for (k, (g, ub)) in d.metrics.gains.iter().zip(&d.upper_bounds).enumerate() {
        println!(
            "target {} gain_db {:.4} upper_bound_db {:.4}",
            k + 1,
            g.db,
            ris_isac::linalg::to_db(*ub)
        );
    }
    println!("lambda {:.9e}", d.report.lambda_used);
    println!("sigma_max {:.9e}", d.system.sigma_max());
    println!("max_abs_delta_phi {:.6}", d.report.max_abs_perturbation);
    println!("objective {:.9e}", d.report.objective_value);
    Ok(())
}

fn cmd_experiment(name: ExperimentName, common: &CommonArgs, argv: Vec<String>) -> Result<(), Error> {
    let start = Instant::now();
    let cfg = resolve_config(common)?;
    let scenario = Scenario::from_config(cfg.clone())?;
    let opts = options(common, &cfg);
    let method: Method = common.method.as_deref().unwrap_or("proposed").parse()?;
    if method == Method::Sdr && scenario.elements() > opts.sdr_cap {
        return Err(Error::CapExceeded {
            n: scenario.elements(),
            cap: opts.sdr_cap,
        });
    }
    let alpha = common.alpha.unwrap_or(SWEEP_ALPHA);
    let alphas = common.alphas.clone().unwrap_or_else(|| DEFAULT_ALPHAS.to_vec());

    let (file, parameters) = match name {
        ExperimentName::Heatmap => (
            "heatmap.csv",
            serde_json::json!({ "method": method.id(), "alpha": cfg.alpha, "grid": heatmap_grid()? }),
        ),
        ExperimentName::AlphaSweep => (
            "alpha_sweep.csv",
            serde_json::json!({ "alphas": alphas, "policies": sweep_policies(cfg.lambda_policy) }),
        ),
        ExperimentName::WeightSweep => (
            "weight_sweep.csv",
            serde_json::json!({ "ratios": DEFAULT_RATIOS, "alpha": alpha, "policy": cfg.lambda_policy }),
        ),
        ExperimentName::AoaScan => (
            "aoa_scan.csv",
            serde_json::json!({ "band_deg": [85.0, 95.0], "band_resolution_deg": 1.0,
                                "scan_deg": [-180.0, 180.0, 0.5], "alpha": alpha }),
        ),
        ExperimentName::Complexity => (
            "complexity.csv",
            serde_json::json!({ "n_elements": DEFAULT_COMPLEXITY_N, "targets": 2, "repeats": 5 }),
        ),
    };
    let mut manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        command: format!("experiment {}", serde_json::to_value(name).unwrap().as_str().unwrap()),
        argv,
        scenario_path: common.scenario.clone(),
        resolved_config: cfg.clone(),
        seeds: opts.seeds.clone(),
        output_dir: common.out.clone(),
        parameters,
        outputs: vec![file.to_string()],
        wall_time_seconds: None,
    };
    manifest.write(&common.out)?;

    let (body, notes) = match name {
        ExperimentName::Heatmap => {
            let grid = run_heatmap_grid(&scenario, method, &opts)?;
            (experiments::heatmap_csv(&grid), Vec::new())
        }
        ExperimentName::AlphaSweep => {
            let r = experiments::sweep_alpha(&scenario, &alphas, &sweep_policies(cfg.lambda_policy), &opts)?;
            (experiments::alpha_sweep_csv(&r), r.notes)
        }
        ExperimentName::WeightSweep => {
            let r = experiments::sweep_weight_ratio(&scenario, &DEFAULT_RATIOS, alpha, cfg.lambda_policy, &opts)?;
            (experiments::weight_sweep_csv(&r), r.notes)
        }
        ExperimentName::AoaScan => {
            let scan = experiments::beampattern_vs_aoa(
                &scenario,
                (85.0, 95.0),
                1.0,
                &experiments::scan_grid(-180.0, 180.0, 0.5),
                alpha,
                &opts,
            )?;
            (experiments::aoa_scan_csv(&scan), scan.result.notes)
        }
        ExperimentName::Complexity => {
            let t = experiments::run_complexity_probe(&scenario, &DEFAULT_COMPLEXITY_N, 2, 5, &opts)?;
            if let Some(slope) = t.proposed_slope {
                println!("proposed log-log slope {slope:.3}");
            }
            (experiments::complexity_csv(&t), t.notes)
        }
    };
    for n in &notes {
        eprintln!("note: {n}");
    }
    let path = common.out.join(file);
    experiments::write_csv(&path, body)?;
    println!("wrote {}", path.display());

    manifest.wall_time_seconds = Some(start.elapsed().as_secs_f64());
    manifest.write(&common.out)
}

fn heatmap_grid() -> Result<GridSpec, Error> {
    GridSpec::with_resolution((0.0, 120.0), (-40.0, 120.0), 1.0)
}

fn run_heatmap_grid(
    scenario: &Scenario,
    method: Method,
    opts: &ExperimentOptions,
) -> Result<experiments::HeatmapGrid, Error> {
    experiments::run_heatmap(scenario, &heatmap_grid()?, method, scenario.config.seed, opts)
}

/// The scenario's policy followed by the two fixed-fraction comparisons.
fn sweep_policies(primary: LambdaPolicy) -> Vec<LambdaPolicy> {
    let mut out = vec![primary];
    for p in [LambdaPolicy::FixedFraction(0.1), LambdaPolicy::FixedFraction(0.5)] {
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(common) => cmd_solve(common),
        Command::Experiment { name, common } => cmd_experiment(*name, common, argv),
        Command::Validate { scenario } => cmd_validate(scenario.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
