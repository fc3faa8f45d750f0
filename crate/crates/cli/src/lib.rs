//! Command-line front end for `nswbandit`: `run`, `sweep` and `validate`.
//!
//! Exit status is 0 on success, 1 on a runtime or validation failure and 2
//! on a configuration error.

pub mod commands;
pub mod config;
pub mod error;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use nswbandit::ScheduleMode;
use sha2::{Digest, Sha256};

pub use config::{parse_algo_list, parse_config_str, parse_seed_list, AlgoSpec, ConfigFile};
pub use error::{CliError, CliResult};

use crate::config::{load_config, InstanceSource};
use crate::error::as_config;

#[derive(Debug, Parser)]
#[command(name = "nswbandit", version, about = "Nash-social-welfare bandit experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one algorithm over a seed ensemble.
    Run(ExperimentArgs),
    /// Run several algorithms on the same instance and seeds.
    Sweep(ExperimentArgs),
    /// Run the property suites.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// TOML experiment configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Instance file.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// explorefirst, epsgreedy or ucb, optionally `name:mode`. `sweep` takes a
    /// comma-separated list.
    #[arg(long)]
    pub algo: Option<String>,
    /// Schedule mode (a or b) for algorithms given without one.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub horizon: Option<u64>,
    /// Number of seeds, starting at the configured base seed.
    #[arg(long, conflicts_with = "seed_list")]
    pub seeds: Option<u64>,
    /// Comma-separated explicit seeds.
    #[arg(long)]
    pub seed_list: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write per-round traces.
    #[arg(long)]
    pub emit_traces: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Multiplies every confidence radius in the clean-event suite.
    #[arg(long, hide = true, default_value_t = 1.0)]
    pub radius_scale: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn file_config(path: Option<&PathBuf>) -> CliResult<ConfigFile> {
    path.map_or_else(|| Ok(ConfigFile::default()), |p| load_config(p))
}

impl ExperimentArgs {
    /// The configuration file (if any) overridden by the flags.
    pub fn to_config(&self, sweep: bool) -> CliResult<ConfigFile> {
        let mut flags = ConfigFile {
            instance: self.instance.clone().map(InstanceSource::Path),
            horizon: self.horizon,
            seeds: self.seeds,
            out: self.out.clone(),
            emit_traces: self.emit_traces.then_some(true),
            ..Default::default()
        };
        if let Some(a) = &self.algo {
            if sweep {
                flags.algorithms = Some(parse_algo_list(a)?);
            } else {
                flags.algo = Some(a.parse()?);
            }
        }
        if let Some(m) = &self.mode {
            flags.mode = Some(m.parse::<ScheduleMode>().map_err(as_config("mode"))?);
        }
        if let Some(s) = &self.seed_list {
            flags.seed_list = Some(parse_seed_list(s)?);
        }
        let file = file_config(self.config.as_ref())?;
        // An explicit seed count on the command line replaces a file's seed list.
        let file = if flags.seeds.is_some() {
            ConfigFile {
                seed_list: None,
                ..file
            }
        } else {
            file
        };
        Ok(file.merge(flags))
    }
}

/// Executes a parsed command line, writing human-readable output to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Run(args) => {
            let summary = commands::cmd_run(&args.to_config(false)?)?;
            let _ = out.write_all(summary.as_bytes());
        }
        Command::Sweep(args) => {
            let summary = commands::cmd_sweep(&args.to_config(true)?)?;
            let _ = out.write_all(summary.as_bytes());
        }
        Command::Validate(args) => {
            let cfg = file_config(args.config.as_ref())?;
            commands::cmd_validate(&cfg, args.radius_scale, out)?;
        }
    }
    Ok(())
}
