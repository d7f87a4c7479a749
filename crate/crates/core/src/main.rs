use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use msflow::cli::config::SimulationConfig;
use msflow::cli::{self, CliError, Overrides};

/// Mullins-Sekerka flow of a graph interface by boundary integrals.
#[derive(Debug, Parser)]
#[command(name = "msflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve the configured profile and write snapshots, diagnostics and a manifest.
    Run(CommonArgs),
    /// Run the operator-identity suite and print a pass/fail table.
    Check(CommonArgs),
    /// Fit the decay rate of a small windowed cosine mode against 2|k|^3.
    DecayTest(CommonArgs),
    /// Compare the flow with its parabolic rescaling at lambda = 2.
    ScalingTest(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// TOML configuration file; documented defaults apply when omitted.
    config: Option<PathBuf>,
    /// Directory for emitted files (overrides output.directory).
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Snapshot cadence in steps (overrides stepping.snapshot_every).
    #[arg(long)]
    snapshot_every: Option<usize>,
    /// Seed for randomized test vectors (overrides seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress progress and report output.
    #[arg(long)]
    quiet: bool,
}

type Action = fn(&SimulationConfig, bool) -> Result<(), CliError>;

fn execute(command: Command) -> Result<(), CliError> {
    let (args, action): (CommonArgs, Action) = match command {
        Command::Run(a) => (a, cli::command_run),
        Command::Check(a) => (a, cli::command_check),
        Command::DecayTest(a) => (a, cli::command_decay_test),
        Command::ScalingTest(a) => (a, cli::command_scaling_test),
    };
    let overrides = Overrides {
        output_dir: args.output_dir,
        snapshot_every: args.snapshot_every,
        seed: args.seed,
        quiet: args.quiet,
    };
    let cfg = cli::load_config(args.config.as_deref(), &overrides)?;
    action(&cfg, overrides.quiet)
}

fn main() -> ExitCode {
    let parsed = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            eprintln!("{}", CliError::Usage(e.kind().to_string()).record());
            return ExitCode::from(cli::EXIT_VALIDATION as u8);
        }
    };
    match execute(parsed.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
