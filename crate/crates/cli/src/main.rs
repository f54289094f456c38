//! `specdiff` command-line front end.
//!
//! Precedence: built-in defaults, then the `--config` file, then flags.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use specdiff::sde::JumpScheme;
use specdiff::Error;

use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "specdiff",
    version,
    about = "Hybrid spectral diffusion simulator and calibrator"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "SPECDIFF_THREADS")]
    pub threads: Option<usize>,
    /// Report failures as one JSON object on standard error.
    #[arg(long, global = true)]
    pub json_errors: bool,
    /// Use the strict calibration tolerance.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Skip SVG output.
    #[arg(long, global = true)]
    pub no_svg: bool,
}

/// Noise parameters given explicitly; each overrides the calibrated or
/// baseline value.
#[derive(Debug, Args, Clone, Default)]
pub struct ParamArgs {
    /// Temperature whose calibrated parameters are used (K).
    #[arg(long = "T", value_name = "K")]
    pub t: Option<f64>,
    /// Diffusion strength S (GHz).
    #[arg(long = "S", value_name = "GHz")]
    pub s: Option<f64>,
    /// Jump rate (Hz).
    #[arg(long, value_name = "HZ")]
    pub lambda_j: Option<f64>,
    /// Jump standard deviation (GHz).
    #[arg(long, value_name = "GHz")]
    pub sigma_j: Option<f64>,
    /// Diffusion correlation time (ns).
    #[arg(long, value_name = "NS")]
    pub tau_sd: Option<f64>,
    /// Mean detuning (GHz).
    #[arg(long, value_name = "GHz")]
    pub omega0: Option<f64>,
}

/// Ensemble overrides.
#[derive(Debug, Args, Clone, Default)]
pub struct GridArgs {
    /// Ensemble size.
    #[arg(long, value_name = "N")]
    pub n_traj: Option<usize>,
    /// Time step (ns).
    #[arg(long, value_name = "NS")]
    pub dt: Option<f64>,
    /// Simulated window (ns).
    #[arg(long, value_name = "NS")]
    pub window: Option<f64>,
    /// Discarded initial time (ns).
    #[arg(long, value_name = "NS")]
    pub burn_in: Option<f64>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
    /// Histogram bins (0 = automatic).
    #[arg(long)]
    pub bins: Option<usize>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum SchemeArg {
    Bernoulli,
    Hazard,
}

impl From<SchemeArg> for JumpScheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Bernoulli => JumpScheme::Bernoulli,
            SchemeArg::Hazard => JumpScheme::Hazard,
        }
    }
}

/// Where calibrated parameters come from.
#[derive(Debug, Args, Clone, Default)]
pub struct CalibArgs {
    /// Calibration CSV written by `calibrate` [default: <out>/calibration.csv].
    #[arg(long, value_name = "PATH")]
    pub calibration: Option<PathBuf>,
    /// Calibrate in-process instead of reading a file.
    #[arg(long)]
    pub inline: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one ensemble and fit its line shape.
    Simulate {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        calib: CalibArgs,
        /// Trajectories to dump to trajectories.csv.
        #[arg(long, value_name = "N")]
        trajectories: Option<usize>,
    },
    /// Fit noise multipliers to the broadening law.
    Calibrate {
        /// Comma-separated, strictly increasing temperatures (K).
        #[arg(long, value_name = "LIST")]
        temps: Option<String>,
        /// Trajectories per Monte-Carlo evaluation.
        #[arg(long, value_name = "N")]
        n_traj: Option<usize>,
        /// Monte-Carlo evaluations per temperature in the final simplex.
        #[arg(long, value_name = "N")]
        max_evals: Option<usize>,
    },
    /// g²(τ) traces per temperature and Rabi frequency.
    G2 {
        /// Comma-separated temperatures (K).
        #[arg(long = "T", value_name = "LIST")]
        temps: Option<String>,
        /// Comma-separated bare Rabi frequencies (GHz).
        #[arg(long, value_name = "LIST")]
        omega_r: Option<String>,
        #[command(flatten)]
        emitter: EmitterArgs,
        #[command(flatten)]
        calib: CalibArgs,
    },
    /// Decay-rate sweeps and the critical temperature.
    Crossover {
        #[command(flatten)]
        emitter: EmitterArgs,
        #[command(flatten)]
        calib: CalibArgs,
    },
    /// Line width against one noise parameter.
    Scan {
        /// sigma | tau-sd | lambda-j | sigma-j
        #[arg(long, value_name = "AXIS", required = true, num_args = 1.., value_delimiter = ',')]
        vary: Vec<String>,
        /// Comma-separated values in the axis units (GHz, ns, Hz, GHz).
        #[arg(long, value_name = "LIST", required = true)]
        values: String,
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        calib: CalibArgs,
        #[command(flatten)]
        emitter: EmitterArgs,
    },
    /// Hybrid line shape against a pure OU process of equal variance.
    CompareOu {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        calib: CalibArgs,
        /// Rescale S and σ_J so the closed-form FWHM equals this (GHz).
        #[arg(long, value_name = "GHz")]
        target_fwhm: Option<f64>,
    },
}

#[derive(Debug, Args, Clone, Default)]
pub struct EmitterArgs {
    /// Radiative lifetime (ns).
    #[arg(long, value_name = "NS")]
    pub t1: Option<f64>,
    /// Intrinsic coherence time (ns).
    #[arg(long, value_name = "NS")]
    pub t2: Option<f64>,
}

/// Failures with their exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] Error),
    #[error("calibration not available: {0}")]
    MissingCalibration(String),
    #[error("usage: {0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::MissingCalibration(_) => 5,
            CliError::Lib(e) => match e {
                Error::InvalidInput(_) | Error::TimeStepTooCoarse { .. } => 2,
                Error::ResourceLimit { .. } => 3,
                Error::CalibrationFailure { .. } => 4,
                Error::NoCrossover { .. } => 6,
                Error::InsufficientData(_) | Error::FitFailure { .. } | Error::PoorFit { .. } | Error::Io(_) => 1,
            },
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::MissingCalibration(_) => "missing_calibration",
            CliError::Lib(e) => match e {
                Error::InvalidInput(_) => "invalid_input",
                Error::TimeStepTooCoarse { .. } => "time_step_too_coarse",
                Error::ResourceLimit { .. } => "resource_limit",
                Error::InsufficientData(_) => "insufficient_data",
                Error::FitFailure { .. } => "fit_failure",
                Error::CalibrationFailure { .. } => "calibration_failure",
                Error::PoorFit { .. } => "poor_fit",
                Error::NoCrossover { .. } => "no_crossover",
                Error::Io(_) => "io",
            },
        }
    }

    fn details(&self) -> serde_json::Value {
        use serde_json::json;
        match self {
            CliError::Lib(Error::TimeStepTooCoarse { rate_dt }) => json!({ "rate_dt": rate_dt }),
            CliError::Lib(Error::ResourceLimit { requested, cap }) => json!({ "requested": requested, "cap": cap }),
            CliError::Lib(Error::FitFailure {
                iterations,
                fallback_fwhm,
            }) => json!({ "iterations": iterations, "fallback_fwhm_GHz": fallback_fwhm }),
            CliError::Lib(Error::CalibrationFailure {
                best,
                tolerance,
                completed,
            }) => json!({
                "T_K": best.multipliers.t,
                "residual_GHz": best.residual,
                "tolerance_GHz": tolerance,
                "completed_T_K": completed.iter().map(|r| r.multipliers.t).collect::<Vec<_>>(),
            }),
            CliError::Lib(Error::PoorFit { fit }) => json!({ "r2": fit.fit_r2, "omegaR_radns": fit.omega_r }),
            CliError::Lib(Error::NoCrossover {
                min_slope,
                max_slope,
                target,
            }) => json!({ "min_slope": min_slope, "max_slope": max_slope, "target_slope": target }),
            _ => serde_json::Value::Null,
        }
    }
}

fn report(err: &CliError, json: bool) {
    if json {
        let v = serde_json::json!({
            "error": err.kind(),
            "exit_code": err.exit_code(),
            "message": err.to_string(),
            "details": err.details(),
        });
        eprintln!("{v}");
    } else {
        eprintln!("error: {err}");
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let g = &cli.global;
    if let Some(n) = g.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size the thread pool: {e}")))?;
    }
    let mut cfg = RunConfig::load(g.config.as_deref())?;
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &g.out {
        cfg.output.dir = out.clone();
    }
    if g.no_svg {
        cfg.output.svg = false;
    }
    let ctx = commands::Ctx::new(cfg, g.strict)?;
    match cli.command {
        Command::Simulate {
            params,
            grid,
            calib,
            trajectories,
        } => commands::simulate(&ctx, &params, &grid, &calib, trajectories),
        Command::Calibrate {
            temps,
            n_traj,
            max_evals,
        } => commands::calibrate(&ctx, temps.as_deref(), n_traj, max_evals),
        Command::G2 {
            temps,
            omega_r,
            emitter,
            calib,
        } => commands::g2(&ctx, temps.as_deref(), omega_r.as_deref(), &emitter, &calib),
        Command::Crossover { emitter, calib } => commands::crossover(&ctx, &emitter, &calib),
        Command::Scan {
            vary,
            values,
            params,
            grid,
            calib,
            emitter,
        } => commands::scan(&ctx, &vary, &values, &params, &grid, &calib, &emitter),
        Command::CompareOu {
            params,
            grid,
            calib,
            target_fwhm,
        } => commands::compare_ou(&ctx, &params, &grid, &calib, target_fwhm),
    }
}

fn main() -> ExitCode {
    let json = std::env::args().any(|a| a == "--json-errors");
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            if json {
                let v = serde_json::json!({
                    "error": "usage",
                    "exit_code": 2,
                    "message": e.kind().to_string(),
                    "details": e.to_string(),
                });
                eprintln!("{v}");
            } else {
                let _ = e.print();
            }
            return ExitCode::from(2);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let json = cli.global.json_errors;
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e, json);
            ExitCode::from(e.exit_code())
        }
    }
}
