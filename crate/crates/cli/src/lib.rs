//! Command-line front end: `validate`, `sweep`, `run`, `generate`, `report`.
//!
//! Settings come from one JSON document (path from `--config` or the
//! `TROOP_CONFIG` environment variable), then `--set key.path=value`
//! assignments, then the dedicated flags, each of which is shorthand for a
//! key path.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::ReportFormat;
use crate::config::{parse_assignment, PipelineConfig, CONFIG_ENV};
use crate::error::{CliError, CliResult, EXIT_CONFIG, EXIT_OK};

#[derive(Debug, Parser)]
#[command(name = "troop", version, about = "Group-behavior classification from multi-entity GPS tracks")]
pub struct Cli {
    /// JSON pipeline configuration.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,

    /// Override one config value, e.g. `--set proximity.threshold=3`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,

    /// `seed`: master seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// `output_dir`.
    #[arg(long = "output-dir", global = true)]
    pub output_dir: Option<PathBuf>,

    /// Worker thread cap; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct InputArgs {
    /// `input.trajectories`.
    #[arg(long)]
    pub trajectories: Option<PathBuf>,
    /// `input.labels`.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// `input.label_resolution`, seconds.
    #[arg(long = "label-resolution")]
    pub label_resolution: Option<i64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load inputs and report ingest statistics and label coverage.
    Validate(InputArgs),
    /// Score every candidate resolution and select the best.
    Sweep(InputArgs),
    /// Cross-validate the baseline and the ensemble; fit the final model.
    Run {
        #[command(flatten)]
        input: InputArgs,
        /// `resolution.fixed`, seconds; sweeps when absent.
        #[arg(long)]
        resolution: Option<i64>,
    },
    /// Write a synthetic scenario as trajectory and label CSVs.
    Generate,
    /// Re-render the table stored in a run or sweep JSON report.
    Report {
        path: PathBuf,
        #[arg(long, value_enum, default_value = "markdown")]
        format: ReportFormat,
    },
}

impl Cli {
    fn overrides(&self) -> CliResult<Vec<(String, String)>> {
        let mut out: Vec<(String, String)> = self.set.iter().map(|s| parse_assignment(s)).collect::<CliResult<_>>()?;
        let json_str = |p: &PathBuf| serde_json::Value::String(p.display().to_string()).to_string();
        if let Some(seed) = self.seed {
            out.push(("seed".into(), seed.to_string()));
        }
        if let Some(dir) = &self.output_dir {
            out.push(("output_dir".into(), json_str(dir)));
        }
        let input = match &self.command {
            Command::Validate(i) | Command::Sweep(i) => Some(i),
            Command::Run { input, resolution } => {
                if let Some(r) = resolution {
                    out.push(("resolution.fixed".into(), r.to_string()));
                }
                Some(input)
            }
            _ => None,
        };
        if let Some(i) = input {
            if let Some(p) = &i.trajectories {
                out.push(("input.trajectories".into(), json_str(p)));
            }
            if let Some(p) = &i.labels {
                out.push(("input.labels".into(), json_str(p)));
            }
            if let Some(r) = i.label_resolution {
                out.push(("input.label_resolution".into(), r.to_string()));
            }
        }
        Ok(out)
    }

    pub fn resolve_config(&self) -> CliResult<PipelineConfig> {
        PipelineConfig::load(self.config.as_deref(), &self.overrides()?)
    }
}

pub fn execute(cli: &Cli, out: &mut (dyn Write + Send)) -> CliResult<()> {
    let dispatch = |out: &mut (dyn Write + Send)| -> CliResult<()> {
        if let Command::Report { path, format } = &cli.command {
            return commands::report(path, *format, out);
        }
        let config = cli.resolve_config()?;
        match &cli.command {
            Command::Validate(_) => commands::validate(&config, out),
            Command::Sweep(_) => commands::sweep(&config, out),
            Command::Run { .. } => commands::run(&config, out),
            Command::Generate => commands::generate(&config, out),
            Command::Report { .. } => unreachable!(),
        }
    };
    match cli.threads {
        Some(0) => Err(CliError::Config("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?
            .install(|| dispatch(out)),
        None => dispatch(out),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut (dyn Write + Send), err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_CONFIG;
            }
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    match execute(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                let _ = writeln!(err, "  caused by: {s}");
                source = s.source();
            }
            e.exit_code()
        }
    }
}
