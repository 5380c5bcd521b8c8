//! Command-line front end: argument model, command implementations and exit codes.

pub mod report;
pub mod verify;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;
use zeno_eraser::{
    counterfactual_audit, run_scenario, sample_outcomes, sweep_visibility, AuditError, CqzeParams,
    ExperimentError, Scenario, ShotConfig, REFERENCE_SEED,
};

use crate::report::{sweep_csv, AuditRecord, RunRecord};
use crate::verify::{run_checks, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_VERIFY_FAILED: i32 = 2;

pub const SEED_ENV: &str = "ZENO_ERASER_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "zeno-eraser",
    version,
    about = "Counterfactual quantum eraser simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one scenario and print its detector probabilities.
    Run(RunArgs),
    /// Write the blocked-channel visibility grid as CSV.
    Sweep(SweepArgs),
    /// Audit where channel-visiting amplitude ends up, with shot sampling.
    Audit(RunArgs),
    /// Run the built-in invariant checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// baseline-no-tag | baseline-tagged | erase-blocked | no-erase-open
    #[arg(long)]
    pub scenario: String,
    /// Outer CQZE cycles (M).
    #[arg(long)]
    pub outer: Option<u32>,
    /// Inner CQZE cycles (N).
    #[arg(long)]
    pub inner: Option<u32>,
    /// Number of Monte-Carlo shots to sample.
    #[arg(long)]
    pub shots: Option<u64>,
    /// RNG seed.
    #[arg(long, env = SEED_ENV)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 10)]
    pub outer_max: u32,
    #[arg(long, default_value_t = 50)]
    pub inner_max: u32,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Skew every rotator by this many radians (sensitivity check).
    #[arg(
        long,
        hide = true,
        default_value_t = 0.0,
        allow_negative_numbers = true
    )]
    pub perturb_angle: f64,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Audit(#[from] AuditError),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("verification failed")]
    VerificationFailed,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::VerificationFailed => EXIT_VERIFY_FAILED,
            _ => EXIT_VALIDATION,
        }
    }
}

/// Executes a parsed command, writing its product to `stdout` or `--output`.
pub fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => emit(&cmd_run(&args)?, args.output.as_deref(), stdout),
        Command::Audit(args) => emit(&cmd_audit(&args)?, args.output.as_deref(), stdout),
        Command::Sweep(args) => emit(&cmd_sweep(&args)?, args.output.as_deref(), stdout),
        Command::Verify(args) => cmd_verify(&args, stdout),
    }
}

fn emit(text: &str, path: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Write {
            path: path.to_owned(),
            source,
        }),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Write {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

fn scenario_params(args: &RunArgs) -> Result<(Scenario, Option<CqzeParams>), CliError> {
    let scenario: Scenario = args.scenario.parse()?;
    let params = match (scenario.channel_policy(), args.outer, args.inner) {
        (None, _, _) => None,
        (Some(policy), Some(m), Some(n)) => {
            Some(CqzeParams::new(m, n, policy).map_err(ExperimentError::from)?)
        }
        (Some(_), _, _) => return Err(ExperimentError::MissingParams.into()),
    };
    Ok((scenario, params))
}

pub fn cmd_run(args: &RunArgs) -> Result<String, CliError> {
    let (scenario, params) = scenario_params(args)?;
    let result = run_scenario::<f64>(scenario, params)?;
    let mut record = RunRecord::new(&result);
    if let Some(shots) = args.shots {
        let seed = args.seed.unwrap_or(REFERENCE_SEED);
        let counts = sample_outcomes(&result, &ShotConfig::new(shots, seed)?)?;
        record = record.with_counts(&counts, seed);
    }
    Ok(match args.format {
        Format::Json => json_line(&record),
        Format::Csv => record.to_csv(),
    })
}

pub fn cmd_audit(args: &RunArgs) -> Result<String, CliError> {
    let (scenario, params) = scenario_params(args)?;
    let params = params.ok_or(AuditError::NoChannel)?;
    let seed = args.seed.unwrap_or(REFERENCE_SEED);
    let config = ShotConfig::new(args.shots.unwrap_or(1_000_000), seed)?;
    let report = counterfactual_audit::<f64>(scenario, params, &config)?;
    let record = AuditRecord::new(&report, seed);
    Ok(match args.format {
        Format::Json => json_line(&record),
        Format::Csv => record.to_csv(),
    })
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<String, CliError> {
    let grid = sweep_visibility::<f64>(args.outer_max, args.inner_max)?;
    Ok(sweep_csv(&grid))
}

pub fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let checks = run_checks(&VerifyOptions {
        angle_skew: args.perturb_angle,
    });
    let mut text = String::new();
    for check in &checks {
        let status = if check.passed { "PASS" } else { "FAIL" };
        text.push_str(&format!("{status} {}: {}\n", check.name, check.detail));
    }
    let all_passed = checks.iter().all(|c| c.passed);
    if all_passed {
        text.push_str("all checks passed\n");
    } else {
        let failed = checks.iter().filter(|c| !c.passed).count();
        text.push_str(&format!("{failed} of {} checks failed\n", checks.len()));
    }
    emit(&text, None, out)?;
    if all_passed {
        Ok(())
    } else {
        Err(CliError::VerificationFailed)
    }
}

fn json_line<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("records serialize");
    s.push('\n');
    s
}
