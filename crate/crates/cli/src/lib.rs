//! Command-line experiment runner.
//!
//! Subcommands: `simulate` (synthetic N-user experiments), `cartpole`
//! (remote cart-pole control), `waterfill` (stationary probabilities for given
//! bar widths) and `bound` (stationary probabilities and bound for a config).
//! Exit codes: 0 on success, 1 for configuration errors, 2 for runtime errors.

pub mod config;
pub mod output;
pub mod run;
pub mod svg;

use std::ffi::OsString;
use std::fmt::Display;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use lapse_core::waterfill::{bar_objective, waterfill, BarSpec};
use thiserror::Error;

use config::{Experiment, ExperimentConfig, Overrides, RawConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("{0}")]
    Runtime(String),
    #[error("cannot write {path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl CliError {
    pub fn config(field: &str, message: impl Display) -> Self {
        CliError::Config {
            field: field.to_string(),
            message: message.to_string(),
        }
    }

    pub fn runtime(e: impl Display) -> Self {
        CliError::Runtime(e.to_string())
    }

    pub fn io(path: &Path, e: impl Display) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 1,
            CliError::Runtime(_) | CliError::Io { .. } => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "lapse", version, about = "Context-aware lapse scheduling experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// First seed (a single seed unless --seeds is given).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of consecutive seeds.
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Slots per trace.
    #[arg(long)]
    pub slots: Option<u64>,
    /// Episodes per seed.
    #[arg(long)]
    pub episodes: Option<usize>,
    /// Policy to run; repeat or comma-separate for several.
    #[arg(long = "policy")]
    pub policies: Vec<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Skip chart.svg.
    #[arg(long)]
    pub no_chart: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthetic N-user experiment (average lapse and threshold violations).
    Simulate {
        /// synthetic_lapse or synthetic_violation.
        #[arg(long)]
        preset: Option<String>,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Remote cart-pole control experiment.
    Cartpole {
        #[command(flatten)]
        args: RunArgs,
    },
    /// Water-filling probabilities for explicit bar widths.
    Waterfill {
        /// Comma-separated positive widths.
        #[arg(long, value_delimiter = ',', required = true)]
        widths: Vec<f64>,
        /// Total volume (number of channels).
        #[arg(long)]
        budget: f64,
    },
    /// Stationary probabilities and the lapse bound of a configuration.
    Bound {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write bound.csv into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_raw(path: Option<&Path>) -> Result<RawConfig, CliError> {
    path.map(RawConfig::load).transpose().map(Option::unwrap_or_default)
}

fn resolve(args: &RunArgs, experiment: Option<Experiment>) -> Result<ExperimentConfig, CliError> {
    let raw = load_raw(args.config.as_deref())?;
    let over = Overrides {
        experiment,
        seed: args.seed,
        seeds: args.seeds,
        slots: args.slots,
        episodes: args.episodes,
        policies: args.policies.clone(),
        out: args.out.clone(),
        no_chart: args.no_chart,
    };
    ExperimentConfig::resolve(raw, &over)
}

fn print_summary(config: &ExperimentConfig, summary: &[output::Summary]) {
    println!("{} -> {}", config.experiment, config.out.display());
    for s in summary {
        match config.experiment {
            Experiment::Cartpole => println!(
                "  {:<22} mean steps {:.3} ± {:.3}",
                s.policy.name(),
                s.mean,
                s.stderr
            ),
            _ => println!(
                "  {:<22} avg lapse {:.4} ± {:.4}   violation {:.3e}",
                s.policy.name(),
                s.mean,
                s.stderr,
                s.second_mean
            ),
        }
    }
}

/// Execute a parsed command.
pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { preset, args } => {
            let experiment = match preset.as_deref() {
                None => None,
                Some(name) => match name.parse::<Experiment>()? {
                    Experiment::Cartpole => {
                        return Err(CliError::config("--preset", "use the `cartpole` subcommand"))
                    }
                    e => Some(e),
                },
            };
            let mut config = resolve(&args, experiment)?;
            if config.experiment == Experiment::Cartpole {
                return Err(CliError::config("experiment", "use the `cartpole` subcommand"));
            }
            if experiment.is_none() && args.config.is_none() {
                config.experiment = Experiment::SyntheticLapse;
            }
            let summary = run::run(&config)?;
            print_summary(&config, &summary);
        }
        Command::Cartpole { args } => {
            let config = resolve(&args, Some(Experiment::Cartpole))?;
            let summary = run::run(&config)?;
            print_summary(&config, &summary);
        }
        Command::Waterfill { widths, budget } => {
            let spec = BarSpec::new(widths, budget).map_err(|e| CliError::config("--widths", e))?;
            let pi = waterfill(&spec).map_err(CliError::runtime)?;
            println!("{:?}", pi.pi);
            println!("objective {}", bar_objective(&spec.widths, &pi.pi));
        }
        Command::Bound { config, out } => {
            let raw = load_raw(config.as_deref())?;
            let cfg = ExperimentConfig::resolve(raw, &Overrides::default())?;
            if cfg.experiment == Experiment::Cartpole {
                return Err(CliError::config("experiment", "bound applies to synthetic experiments"));
            }
            let (pi, rows) = run::synthetic_bound(&cfg)?;
            let total: f64 = rows.iter().map(output::BoundRow::term).sum();
            println!("pi {:?}", pi.pi);
            println!("bound {total}");
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
                output::write_bound(&dir.join("bound.csv"), &rows)?;
            }
        }
    }
    Ok(())
}

/// Parse `args`, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
