//! Scenario-driven front end for the calforecast library.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub mod commands;
pub mod output;
pub mod reproduce;
pub mod scenario;

use commands::Overrides;
use output::Format;
use scenario::Scenario;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad invocation, e.g. an unknown example id.
    Usage(String),
    /// Scenario rejected before running.
    Invalid(String),
    Runtime(String),
    Io(String),
    /// Some reproduction band was missed.
    Bands(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Invalid(_) => 2,
            CliError::Runtime(_) | CliError::Io(_) | CliError::Bands(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Invalid(m) => write!(f, "invalid input: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Bands(n) => write!(f, "{n} check(s) outside their band"),
        }
    }
}

impl std::error::Error for CliError {}

#[derive(Debug, Parser)]
#[command(
    name = "calforecast",
    version,
    about = "Calibrated strategic forecasting experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Override the seed of every game (first seed of a sweep) and simulation.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override every horizon.
    #[arg(long, global = true)]
    pub horizon: Option<u64>,
    /// Directory for written artifacts.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Artifact format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Record rolling metrics every N periods.
    #[arg(long, global = true, value_name = "N")]
    pub metrics_every: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the persuasion and MDP instances of a scenario.
    Solve {
        /// Scenario file, or the name of a built-in scenario.
        scenario: String,
    },
    /// Run the replays and games of a scenario and write traces.
    Simulate { scenario: String },
    /// Run pinned examples and compare against their acceptance bands.
    Reproduce {
        /// Example ids, or `all`.
        ids: Vec<String>,
        /// List the known ids.
        #[arg(long)]
        list: bool,
    },
    /// Print reports for a written JSON artifact or a scenario file.
    Report { path: PathBuf },
}

fn load(arg: &str) -> Result<Scenario, CliError> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Some(text) = reproduce::builtin(arg) {
            return Scenario::parse(text);
        }
    }
    Scenario::load(path)
}

/// Runs a parsed command line and returns what to print on success.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let ov = Overrides {
        seed: cli.seed,
        horizon: cli.horizon,
        metrics_every: cli.metrics_every,
    };
    if cli.horizon == Some(0) {
        return Err(CliError::Invalid("horizon must be at least 1".into()));
    }
    if cli.metrics_every == Some(0) {
        return Err(CliError::Invalid(
            "metrics interval must be at least 1".into(),
        ));
    }
    match &cli.command {
        Command::Solve { scenario } => commands::solve(&load(scenario)?, ov, &cli.out),
        Command::Simulate { scenario } => {
            commands::simulate(&load(scenario)?, ov, &cli.out, cli.format)
        }
        Command::Report { path } => commands::report(path, ov),
        Command::Reproduce { ids, list } => {
            if *list {
                return Ok(reproduce::ids().join("\n") + "\n");
            }
            if ids.is_empty() {
                return Err(CliError::Usage(format!(
                    "name an example id or `all`; known: {}",
                    reproduce::ids().join(", ")
                )));
            }
            let wanted: Vec<String> = if ids.iter().any(|i| i == "all") {
                reproduce::ids().into_iter().map(String::from).collect()
            } else {
                ids.clone()
            };
            // reject unknown ids before running anything
            if let Some(bad) = wanted.iter().find(|i| {
                reproduce::builtin(i).is_none() || !reproduce::ids().contains(&i.as_str())
            }) {
                return Err(CliError::Usage(format!(
                    "unknown example id {bad:?}; known: {}",
                    reproduce::ids().join(", ")
                )));
            }
            let mut checks = Vec::new();
            for id in &wanted {
                checks.extend(reproduce::run(id)?);
            }
            let text = reproduce::render(&checks);
            let failed = checks.iter().filter(|c| !c.ok).count();
            if failed > 0 {
                print!("{text}");
                return Err(CliError::Bands(failed));
            }
            Ok(text)
        }
    }
}
