//! Command-line front end: argument parsing, run orchestration and output
//! files.
//!
//! Exit codes:
//!
//! | code | meaning                                               |
//! |------|-------------------------------------------------------|
//! | 0    | success                                               |
//! | 1    | internal error                                        |
//! | 2    | usage error (bad arguments)                           |
//! | 3    | invalid configuration or insufficient grid resolution |
//! | 4    | file I/O error                                        |
//! | 5    | numerical failure (divergence, no steady state, ...)  |
//! | 6    | `validate` ran and at least one check failed          |

pub mod checks;
pub mod commands;
pub mod config;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::geometry::GeometryError;
use crate::material::MaterialError;
use crate::sim::SimError;

pub use config::{Config, ResolvedModel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_NUMERICAL: i32 = 5;
pub const EXIT_CHECKS_FAILED: i32 = 6;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("analysis: {0}")]
    Analysis(#[from] AnalysisError),
    #[error("{failed} of {total} checks failed")]
    ChecksFailed { failed: usize, total: usize },
    #[error("{message}; completed before the failure: {completed}")]
    Partial {
        message: String,
        completed: String,
        code: i32,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Config(_) | Self::Geometry(_) => EXIT_CONFIG,
            Self::Io { .. } => EXIT_IO,
            Self::Material(e) => match e {
                MaterialError::Domain { .. } => EXIT_CONFIG,
                _ => EXIT_NUMERICAL,
            },
            Self::Sim(e) => match e {
                SimError::Config { .. } | SimError::Resolution(_) | SimError::Geometry(_) => {
                    EXIT_CONFIG
                }
                _ => EXIT_NUMERICAL,
            },
            Self::Analysis(_) => EXIT_NUMERICAL,
            Self::ChecksFailed { .. } => EXIT_CHECKS_FAILED,
            Self::Partial { code, .. } => *code,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "porosurf",
    version,
    about = "Surface-wave channels on porous reconfigurable surfaces"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// TOML configuration file; built-in defaults when omitted.
    #[arg(long, short, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for all outputs (created if missing).
    #[arg(long, short, global = true, default_value = "out")]
    pub output_dir: PathBuf,
    /// Only print errors.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    /// Resolve the configuration and write the manifest (and geometry), but
    /// run nothing expensive.
    #[arg(long, global = true)]
    pub dry_run: bool,
    /// Worker threads for the solver (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Effective permittivity and matched thickness of models 0-5.
    DesignTable,
    /// Run one model and analyse its centerline profile.
    Simulate {
        #[arg(long, short)]
        model: u8,
    },
    /// Run several models under one simulation config and tabulate them.
    Compare {
        /// Comma-separated model ids.
        #[arg(long, short, value_delimiter = ',', default_value = "0,1,2,3,4,5")]
        models: Vec<u8>,
    },
    /// Broadband transmission of one model against its empty channel.
    Sweep {
        #[arg(long, short)]
        model: u8,
        /// Band start (Hz); `sweep.f_lo` when omitted.
        #[arg(long)]
        f_lo: Option<f64>,
        /// Band end (Hz); `sweep.f_hi` when omitted.
        #[arg(long)]
        f_hi: Option<f64>,
        /// Number of frequencies; `sweep.n_points` when omitted.
        #[arg(long, short)]
        n_points: Option<usize>,
    },
    /// Run the oracle checks and report pass/fail per check.
    Validate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::DesignTable => "design-table",
            Self::Simulate { .. } => "simulate",
            Self::Compare { .. } => "compare",
            Self::Sweep { .. } => "sweep",
            Self::Validate => "validate",
        }
    }
}

/// Everything needed to reproduce a run; written before any simulation.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub determinism: String,
    pub config: Config,
    pub models: Vec<ResolvedModel>,
}

impl RunManifest {
    pub fn new(
        global: &GlobalArgs,
        command: &Command,
        config: &Config,
        models: Vec<ResolvedModel>,
    ) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.name().into(),
            config_path: global.config.clone(),
            output_dir: global.output_dir.clone(),
            determinism:
                "no randomness is used; CSV outputs are byte-identical for any thread count".into(),
            config: config.clone(),
            models,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }
}

/// Output directory writer that also logs progress unless quiet.
pub struct Output {
    dir: PathBuf,
    quiet: bool,
    written: Vec<PathBuf>,
}

impl Output {
    pub fn create(dir: &Path, quiet: bool) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            quiet,
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn log(&self, message: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", message.as_ref());
        }
    }

    /// Printed to stdout unless quiet.
    pub fn say(&self, message: impl AsRef<str>) {
        if !self.quiet {
            print!("{}", message.as_ref());
        }
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn load_config(global: &GlobalArgs) -> Result<Config, CliError> {
    let mut config = match &global.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(n) = global.threads {
        config.simulation.threads = Some(n);
    }
    config.validate()?;
    Ok(config)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let config = load_config(&cli.global)?;
    let mut out = Output::create(&cli.global.output_dir, cli.global.quiet)?;
    match &cli.command {
        Command::DesignTable => {
            commands::design_table(&cli.global, &cli.command, &config, &mut out)
        }
        Command::Simulate { model } => {
            commands::simulate(&cli.global, &cli.command, &config, *model, &mut out)
        }
        Command::Compare { models } => {
            commands::compare(&cli.global, &cli.command, &config, models, &mut out)
        }
        Command::Sweep {
            model,
            f_lo,
            f_hi,
            n_points,
        } => {
            let s = &config.sweep;
            let band = (f_lo.unwrap_or(s.f_lo), f_hi.unwrap_or(s.f_hi));
            let n = n_points.unwrap_or(s.n_points);
            commands::sweep(
                &cli.global,
                &cli.command,
                &config,
                *model,
                band,
                n,
                &mut out,
            )
        }
        Command::Validate => checks::validate(&cli.global, &cli.command, &config, &mut out),
    }
}
