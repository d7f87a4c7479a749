//! Command layer: configuration loading, run orchestration, file emission and the
//! built-in verification commands. All process I/O of the crate lives here.

pub mod check;
pub mod config;
pub mod experiments;
pub mod output;

use std::fmt;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::evolution::{run_simulation_with, StopReason};
use crate::Error;
use config::{parse_unvalidated, ConfigError, FieldError, SimulationConfig};

pub use config::parse_config;

/// Exit statuses.
pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Scale factor and final time of `scaling-test`.
pub const SCALING_LAMBDA: f64 = 2.0;
pub const SCALING_TIME: f64 = 0.05;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(ConfigError),
    Numerical(Error),
    /// A verification command ran but at least one check failed.
    CheckFailed(String),
    Io { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => EXIT_VALIDATION,
            CliError::Numerical(_) | CliError::CheckFailed(_) => EXIT_NUMERICAL,
            CliError::Io { .. } => EXIT_IO,
        }
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            message: err.to_string(),
        }
    }

    /// One-line JSON record for the diagnostic stream.
    pub fn record(&self) -> String {
        let mut rec = json!({
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        let kind = match self {
            CliError::Usage(_) => "usage",
            CliError::Config(ConfigError::Syntax { line, column, .. }) => {
                rec["line"] = json!(line);
                rec["column"] = json!(column);
                "syntax"
            }
            CliError::Config(ConfigError::Invalid(errs)) => {
                rec["fields"] = json!(errs);
                "validation"
            }
            CliError::Numerical(_) => "numerical",
            CliError::CheckFailed(_) => "check_failed",
            CliError::Io { path, .. } => {
                rec["path"] = json!(path);
                "io"
            }
        };
        rec["kind"] = json!(kind);
        json!({ "error": rec }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Numerical(e) => write!(f, "{e}"),
            CliError::CheckFailed(m) => write!(f, "{m}"),
            CliError::Io { path, message } => write!(f, "{}: {message}", path.display()),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Configuration { field, message } => {
                CliError::Config(ConfigError::Invalid(vec![FieldError { field, message }]))
            }
            e => CliError::Numerical(e),
        }
    }
}

/// Command-line overrides shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub snapshot_every: Option<usize>,
    pub seed: Option<u64>,
    pub quiet: bool,
}

/// Reads the configuration at `path` (defaults when absent), applies `overrides` and
/// validates the result.
pub fn load_config(path: Option<&Path>, overrides: &Overrides) -> Result<SimulationConfig, CliError> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            parse_unvalidated(&text)?
        }
        None => SimulationConfig::default(),
    };
    if let Some(d) = &overrides.output_dir {
        cfg.output.directory = d.clone();
    }
    if let Some(s) = overrides.snapshot_every {
        cfg.stepping.snapshot_every = s;
    }
    if let Some(s) = overrides.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// `run`: evolves the configured profile and writes snapshots, diagnostics and the
/// manifest. Outputs are written even when the run stops early.
pub fn command_run(cfg: &SimulationConfig, quiet: bool) -> Result<(), CliError> {
    let run = cfg.run_config()?;
    let total = (run.t_end / run.dt).ceil() as usize;
    let every = (total / 10).max(1);
    let traj = run_simulation_with(&run, |s| {
        if !quiet && s.step_index % every == 0 {
            println!(
                "step {:>7}/{total}  t = {:.4e}  |f|_inf = {:.4e}  max slope = {:.4e}",
                s.step_index, s.t, s.diagnostics.linf, s.diagnostics.max_slope
            );
        }
    })?;
    let written = output::write_run(cfg, &traj)?;
    if !quiet {
        println!(
            "{} after {} steps, t = {:.6e}; {} files in {}",
            traj.stop.label(),
            traj.last().step_index,
            traj.last().t,
            written.len(),
            cfg.output.directory.display()
        );
    }
    match &traj.stop {
        StopReason::Completed => Ok(()),
        StopReason::Failed(e) => Err(CliError::Numerical(e.clone())),
        StopReason::BlowUpSuspected { max_slope } => {
            Err(CliError::Numerical(Error::BlowUpSuspected { max_slope: *max_slope }))
        }
        StopReason::ResolutionLost { spectral_tail } => Err(CliError::Numerical(Error::StepRefused(
            format!("resolution lost: spectral tail {spectral_tail:.3e}"),
        ))),
    }
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

/// `check`: prints the identity table; fails if any check fails.
pub fn command_check(cfg: &SimulationConfig, quiet: bool) -> Result<(), CliError> {
    let results = check::run_identity_suite(cfg.seed, cfg.solver())?;
    if !quiet {
        println!("{:<44} {:>12}  {:<12} status", "check", "measured", "bound");
        for r in &results {
            let bound = match r.bound {
                check::Bound::AtMost(b) => format!("<= {b:.1e}"),
                check::Bound::AtLeast(b) => format!(">= {b:.1}"),
            };
            println!("{:<44} {:>12.3e}  {:<12} {}", r.name, r.measured, bound, verdict(r.passed()));
        }
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed()).map(|r| r.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!("failed checks: {}", failed.join(", "))))
    }
}

/// `decay-test`: fitted decay rate of the configured wavenumber against `2|k|^3`.
pub fn command_decay_test(cfg: &SimulationConfig, quiet: bool) -> Result<(), CliError> {
    let grid = cfg.grid();
    let k = cfg.initial.wavenumber;
    if k == 0.0 || grid.slot_of_wavenumber(k).is_none() {
        return Err(ConfigError::Invalid(vec![FieldError {
            field: "initial.wavenumber".into(),
            message: format!(
                "{k} is not a nonzero resolved multiple of pi / L = {}",
                std::f64::consts::PI / grid.half_length()
            ),
        }])
        .into());
    }
    let t_fit = experiments::default_fit_window(k).min(cfg.stepping.t_end);
    let r = experiments::decay_experiment(grid, k, cfg.stepping.dt, t_fit, &cfg.solver())?;
    if !quiet {
        println!(
            "decay k = {}: measured rate {:.6}, expected {:.6}, relative error {:.3e} (tolerance {:.0e}) over t in [0, {:.4}], {} steps: {}",
            r.wavenumber,
            r.measured_rate,
            r.expected_rate,
            r.rel_error,
            experiments::DECAY_TOLERANCE,
            r.t_fit,
            r.steps,
            verdict(r.passed())
        );
    }
    if r.passed() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!("decay rate off by {:.3e}", r.rel_error)))
    }
}

/// `scaling-test`: compares the flow of the configured profile with its parabolic
/// rescaling at `lambda = 2`.
pub fn command_scaling_test(cfg: &SimulationConfig, quiet: bool) -> Result<(), CliError> {
    let f0 = cfg.initial_profile()?;
    let t = SCALING_TIME.min(cfg.stepping.t_end);
    let r = experiments::scaling_experiment(&f0, SCALING_LAMBDA, cfg.stepping.dt, t, &cfg.solver())?;
    if !quiet {
        println!(
            "scaling lambda = {}: max defect {:.3e} at t = {:.4}, bound {:.3e} ({:.0e} |f0|_inf), {} steps: {}",
            r.lambda,
            r.defect,
            r.t,
            r.bound,
            experiments::SCALING_TOLERANCE,
            r.steps,
            verdict(r.passed())
        );
    }
    if r.passed() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!("scaling defect {:.3e} above {:.3e}", r.defect, r.bound)))
    }
}
