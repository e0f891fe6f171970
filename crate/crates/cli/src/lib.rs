//! The `tailwave` command line: argument parsing, command dispatch and report output.

pub mod commands;
pub mod config;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use tailwave::grid::Field;

pub use config::{Command, Overrides, RunConfig};

pub const SCHEMA: &str = "tailwave/1";

pub const EXIT_OK: u8 = 0;
pub const EXIT_IO: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_INDETERMINATE: u8 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] tailwave::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> CliError {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => EXIT_IO,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Core(tailwave::Error::IndeterminateTermination(_)) => EXIT_INDETERMINATE,
            CliError::Core(e) if e.is_numerical() => EXIT_NUMERICAL,
            CliError::Core(_) => EXIT_VALIDATION,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "tailwave",
    version,
    about = "Tail analysis of 1+1 linear hyperbolic equations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Characteristic-propagation test
    Classify(RunArgs),
    /// Riemann function on a grid below a base point
    Riemann(RunArgs),
    /// Goursat or Cauchy solve with bump data
    Solve(RunArgs),
    /// Kundt–Newman substitution sequence and exact amplitudes
    Kn(RunArgs),
    /// Tail measurement behind compactly supported data
    Tail(RunArgs),
    /// List the built-in equations, or show one with its closed-form checks
    Registry(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Equation JSON file or `registry:<name>`
    pub equation: Option<String>,
    /// JSON file with default settings; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub flags: Overrides,
}

impl Sub {
    fn split(self) -> (Command, RunArgs) {
        match self {
            Sub::Classify(a) => (Command::Classify, a),
            Sub::Riemann(a) => (Command::Riemann, a),
            Sub::Solve(a) => (Command::Solve, a),
            Sub::Kn(a) => (Command::Kn, a),
            Sub::Tail(a) => (Command::Tail, a),
            Sub::Registry(a) => (Command::Registry, a),
        }
    }
}

/// Merge flags over the config file and resolve defaults.
pub fn resolve(sub: Sub) -> Result<RunConfig, CliError> {
    let (command, args) = sub.split();
    let mut flags = args.flags;
    if let Some(eq) = args.equation {
        if flags.eq.as_ref().is_some_and(|e| *e != eq) {
            return Err(CliError::Validation(
                "equation given both positionally and with --eq".into(),
            ));
        }
        flags.eq = Some(eq);
    }
    let merged = match &args.config {
        Some(path) => flags.or(Overrides::from_file(path)?),
        None => flags,
    };
    RunConfig::resolve(command, merged)
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    schema: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    result: T,
}

/// Pretty JSON report. Identical inputs give identical bytes.
pub fn render_report<T: Serialize>(cfg: &RunConfig, result: T) -> String {
    let report = Report {
        schema: SCHEMA,
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        result,
    };
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    text
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) if p.as_os_str().is_empty() => Err(CliError::io(
            p,
            std::io::Error::new(std::io::ErrorKind::InvalidInput, "empty output path"),
        )),
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}

/// CSV grid for heatmap tools: first-axis coordinates across the header,
/// second-axis coordinates down the first column.
pub fn emit_plot_data(field: &Field, path: &Path) -> Result<(), CliError> {
    field.write_csv(path).map_err(|e| CliError::io(path, e))
}

/// Run one command and write its artifacts. Returns the exit status.
pub fn run(cfg: &RunConfig) -> Result<u8, CliError> {
    let out = commands::dispatch(cfg)?;
    if let (Some(path), Some(field)) = (&cfg.csv, &out.field) {
        emit_plot_data(field, path)?;
    } else if cfg.csv.is_some() {
        log::warn!("{:?} produces no grid; --csv ignored", cfg.command);
    }
    write_text(cfg.out.as_deref(), &render_report(cfg, &out.result))?;
    Ok(out.status)
}

pub fn execute(cli: Cli) -> Result<u8, CliError> {
    let cfg = resolve(cli.command)?;
    log::debug!("resolved config: {cfg:?}");
    run(&cfg)
}
