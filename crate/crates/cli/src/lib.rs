//! Command-line front end of the suite: simulation, sweeps, analysis of
//! measured decay curves and channel metrics.
//!
//! Exit codes: 0 success, 1 output not writable, 2 configuration or usage
//! error, 3 malformed input data, 4 numerical failure.

pub mod commands;
pub mod config;
mod error;
pub mod io;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use error::{exit, CliError, CliResult};

/// Format of tabular outputs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "mcmrb", version, about = "Mid-circuit measurement benchmarking suite")]
pub struct Cli {
    /// Worker threads for simulation (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output directory (default: `dir` in [output], else `out`).
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Format of decay curves and summary tables.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct SuiteArgs {
    #[arg(long)]
    pub config: PathBuf,

    /// Overrides `seed` in [suite]; decimal or 0x-hex.
    #[arg(long, value_parser = parse_seed_arg)]
    pub seed: Option<u64>,

    /// Overrides `shots` in [suite]; 0 gives exact probabilities.
    #[arg(long)]
    pub shots: Option<u64>,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario, fit it and classify the result.
    Simulate(SuiteArgs),
    /// Simulate every point of the [sweep] grid.
    Sweep(SuiteArgs),
    /// Fit and classify decay curves from a CSV or JSON file.
    Analyze {
        #[arg(long)]
        data: PathBuf,
        /// Supplies thresholds and `shots`.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Shots behind each probability; 0 (default) means exact.
        #[arg(long)]
        shots: Option<u64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Choi matrix, transfer matrix and infidelity of one measurement step.
    Metrics {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Classify a stored suite_result.json.
    Report {
        #[arg(long)]
        data: PathBuf,
        /// Supplies thresholds.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_seed_arg(s: &str) -> Result<u64, String> {
    config::parse_seed(s)
}

impl SuiteArgs {
    fn overrides(&self) -> commands::Overrides {
        commands::Overrides {
            out: self.output.out.clone(),
            seed: self.seed,
            shots: self.shots,
            format: self.output.format,
        }
    }
}

/// Executes a parsed command line.
pub fn execute(cli: &Cli) -> CliResult<commands::Outcome> {
    let body = || match &cli.command {
        Command::Simulate(args) => commands::simulate(&args.config, &args.overrides()),
        Command::Sweep(args) => commands::sweep(&args.config, &args.overrides()),
        Command::Analyze {
            data,
            config,
            shots,
            output,
        } => commands::analyze(
            data,
            config.as_deref(),
            &commands::Overrides {
                out: output.out.clone(),
                seed: None,
                shots: *shots,
                format: output.format,
            },
        ),
        Command::Metrics { config, output } => commands::metrics(
            config,
            &commands::Overrides {
                out: output.out.clone(),
                format: output.format,
                ..Default::default()
            },
        ),
        Command::Report { data, config, out } => commands::report(data, config.as_deref(), out.as_deref()),
    };
    match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Numeric(format!("cannot start {n} threads: {e}")))?
            .install(body),
        None => body(),
    }
}

/// Parses `args`, runs the command, prints the report or diagnostic and
/// returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::CONFIG } else { exit::SUCCESS };
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.report);
            if let Some(dir) = outcome.out_dir {
                println!("outputs in {}", dir.display());
            }
            exit::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
