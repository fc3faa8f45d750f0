//! Experiment configuration: a TOML file merged with command-line overrides.
//!
//! ```toml
//! instance = "instances/benchmark.toml"   # or an inline [instance] table
//! algo = "ucb"
//! mode = "a"
//! horizon = 10000
//! seeds = 20          # seeds base_seed .. base_seed + seeds
//! base_seed = 0
//! # seed_list = [3, 7, 11]
//! out = "out/ucb-a"
//! emit_traces = false
//! algorithms = ["explorefirst", "epsgreedy:a", "ucb:a"]   # sweep only
//!
//! [optimizer]
//! max_iterations = 5000
//!
//! [validate]
//! samples = 10000
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nswbandit::env::parse_instance_table;
use nswbandit::validate::ValidationConfig;
use nswbandit::{AgentKind, BanditInstance, OptimizerConfig, ScheduleMode};
use serde::Serialize;
use toml::{Table, Value};

use crate::error::{as_config, CliError, CliResult};

/// Seed count used when neither `seeds` nor `seed_list` is given.
pub const DEFAULT_SEED_COUNT: u64 = 1;
pub const DEFAULT_OUT_DIR: &str = "out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlgoName {
    ExploreFirst,
    EpsilonGreedy,
    Ucb,
}

impl AlgoName {
    pub fn as_str(&self) -> &'static str {
        match self {
            AlgoName::ExploreFirst => "explorefirst",
            AlgoName::EpsilonGreedy => "epsgreedy",
            AlgoName::Ucb => "ucb",
        }
    }
}

impl FromStr for AlgoName {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "explorefirst" | "explore-first" => Ok(AlgoName::ExploreFirst),
            "epsgreedy" | "epsilon-greedy" => Ok(AlgoName::EpsilonGreedy),
            "ucb" => Ok(AlgoName::Ucb),
            other => Err(CliError::config(
                "algo",
                format!("unknown algorithm `{other}` (expected explorefirst, epsgreedy or ucb)"),
            )),
        }
    }
}

/// An algorithm with an optional schedule mode, written `name` or `name:mode`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AlgoSpec {
    pub algo: AlgoName,
    pub mode: Option<ScheduleMode>,
}

impl AlgoSpec {
    /// Builds the agent for an instance, filling a missing mode with `default_mode`.
    pub fn agent_kind(
        &self,
        default_mode: ScheduleMode,
        instance: &BanditInstance,
        horizon: u64,
    ) -> nswbandit::Result<AgentKind> {
        let mode = self.mode.unwrap_or(default_mode);
        Ok(match self.algo {
            AlgoName::ExploreFirst => {
                AgentKind::explore_first(mode, instance.n_agents(), instance.n_arms(), horizon)?
            }
            AlgoName::EpsilonGreedy => AgentKind::EpsilonGreedy { mode },
            AlgoName::Ucb => AgentKind::Ucb { mode },
        })
    }
}

impl fmt::Display for AlgoSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mode {
            Some(m) => write!(f, "{}:{m}", self.algo.as_str()),
            None => f.write_str(self.algo.as_str()),
        }
    }
}

impl FromStr for AlgoSpec {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let (name, mode) = match s.split_once(':') {
            Some((name, mode)) => (name, Some(mode)),
            None => (s, None),
        };
        let algo = name.parse()?;
        let mode = mode
            .map(|m| m.parse::<ScheduleMode>().map_err(as_config("algo")))
            .transpose()?;
        Ok(AlgoSpec { algo, mode })
    }
}

/// Parses a comma-separated list of algorithm specs.
pub fn parse_algo_list(s: &str) -> CliResult<Vec<AlgoSpec>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(str::parse)
        .collect()
}

/// Parses a comma-separated list of seeds such as `1,2,40`.
pub fn parse_seed_list(s: &str) -> CliResult<Vec<u64>> {
    let seeds = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<u64>()
                .map_err(|e| CliError::config("seed_list", format!("`{}`: {e}", p.trim())))
        })
        .collect::<CliResult<Vec<_>>>()?;
    check_seed_list(&seeds)?;
    Ok(seeds)
}

fn check_seed_list(seeds: &[u64]) -> CliResult<()> {
    if seeds.is_empty() {
        return Err(CliError::config("seed_list", "at least one seed is required"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSource {
    Path(PathBuf),
    Inline(BanditInstance),
}

/// Optimizer fields that may be overridden; absent ones keep the in-loop defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OptimizerOverrides {
    pub max_iterations: Option<usize>,
    pub step_init: Option<f64>,
    pub tolerance: Option<f64>,
    pub restarts: Option<usize>,
    pub utility_floor: Option<f64>,
    pub restart_seed: Option<u64>,
}

impl OptimizerOverrides {
    pub fn apply(&self, base: OptimizerConfig) -> CliResult<OptimizerConfig> {
        let cfg = OptimizerConfig {
            max_iterations: self.max_iterations.unwrap_or(base.max_iterations),
            step_init: self.step_init.unwrap_or(base.step_init),
            tolerance: self.tolerance.unwrap_or(base.tolerance),
            restarts: self.restarts.unwrap_or(base.restarts),
            utility_floor: self.utility_floor.unwrap_or(base.utility_floor),
            restart_seed: self.restart_seed.unwrap_or(base.restart_seed),
        };
        cfg.validate().map_err(as_config("optimizer"))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidateOverrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub oracle_instances: Option<usize>,
    pub clean_event_seeds: Option<usize>,
}

impl ValidateOverrides {
    pub fn apply(&self, mut base: ValidationConfig) -> CliResult<ValidationConfig> {
        base.seed = self.seed.unwrap_or(base.seed);
        base.samples = self.samples.unwrap_or(base.samples);
        base.oracle_instances = self.oracle_instances.unwrap_or(base.oracle_instances);
        base.clean_event_seeds = self.clean_event_seeds.unwrap_or(base.clean_event_seeds);
        for (field, v) in [
            ("validate.samples", base.samples),
            ("validate.clean_event_seeds", base.clean_event_seeds),
        ] {
            if v == 0 {
                return Err(CliError::config(field, "must be >= 1"));
            }
        }
        Ok(base)
    }
}

/// Everything a configuration file or the command line may set. Every field
/// is optional until [`ConfigFile::resolve`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub instance: Option<InstanceSource>,
    pub algo: Option<AlgoSpec>,
    pub mode: Option<ScheduleMode>,
    pub algorithms: Option<Vec<AlgoSpec>>,
    pub horizon: Option<u64>,
    pub seeds: Option<u64>,
    pub base_seed: Option<u64>,
    pub seed_list: Option<Vec<u64>>,
    pub out: Option<PathBuf>,
    pub emit_traces: Option<bool>,
    pub optimizer: OptimizerOverrides,
    pub validate: ValidateOverrides,
}

fn expect_int(value: &Value, field: &str) -> CliResult<u64> {
    match value {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        Value::Integer(_) => Err(CliError::config(field, "must be non-negative")),
        _ => Err(CliError::config(field, "expected an integer")),
    }
}

fn expect_float(value: &Value, field: &str) -> CliResult<f64> {
    match value {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(CliError::config(field, "expected a number")),
    }
}

fn expect_str<'v>(value: &'v Value, field: &str) -> CliResult<&'v str> {
    value
        .as_str()
        .ok_or_else(|| CliError::config(field, "expected a string"))
}

fn expect_table<'v>(value: &'v Value, field: &str) -> CliResult<&'v Table> {
    value
        .as_table()
        .ok_or_else(|| CliError::config(field, "expected a table"))
}

fn parse_optimizer(table: &Table) -> CliResult<OptimizerOverrides> {
    let mut o = OptimizerOverrides::default();
    for (key, value) in table {
        let field = format!("optimizer.{key}");
        match key.as_str() {
            "max_iterations" => o.max_iterations = Some(expect_int(value, &field)? as usize),
            "step_init" => o.step_init = Some(expect_float(value, &field)?),
            "tolerance" => o.tolerance = Some(expect_float(value, &field)?),
            "restarts" => o.restarts = Some(expect_int(value, &field)? as usize),
            "utility_floor" => o.utility_floor = Some(expect_float(value, &field)?),
            "restart_seed" => o.restart_seed = Some(expect_int(value, &field)?),
            _ => return Err(CliError::config(field, "unknown field")),
        }
    }
    Ok(o)
}

fn parse_validate(table: &Table) -> CliResult<ValidateOverrides> {
    let mut v = ValidateOverrides::default();
    for (key, value) in table {
        let field = format!("validate.{key}");
        match key.as_str() {
            "seed" => v.seed = Some(expect_int(value, &field)?),
            "samples" => v.samples = Some(expect_int(value, &field)? as usize),
            "oracle_instances" => v.oracle_instances = Some(expect_int(value, &field)? as usize),
            "clean_event_seeds" => v.clean_event_seeds = Some(expect_int(value, &field)? as usize),
            _ => return Err(CliError::config(field, "unknown field")),
        }
    }
    Ok(v)
}

/// Parses configuration text. Instance paths are kept as written; they are
/// resolved against the configuration file's directory by [`load_config`].
pub fn parse_config_str(text: &str) -> CliResult<ConfigFile> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::config("<document>", e.message().to_owned()))?;
    let mut cfg = ConfigFile::default();
    for (key, value) in &table {
        let field = key.as_str();
        match field {
            "instance" => {
                cfg.instance = Some(match value {
                    Value::String(p) => InstanceSource::Path(PathBuf::from(p)),
                    Value::Table(t) => InstanceSource::Inline(
                        parse_instance_table(t, "instance.").map_err(as_config("instance"))?,
                    ),
                    _ => return Err(CliError::config(field, "expected a path or a table")),
                })
            }
            "algo" => cfg.algo = Some(expect_str(value, field)?.parse()?),
            "mode" => {
                cfg.mode = Some(
                    expect_str(value, field)?
                        .parse()
                        .map_err(as_config("mode"))?,
                )
            }
            "algorithms" => {
                let list = value
                    .as_array()
                    .ok_or_else(|| CliError::config(field, "expected an array of strings"))?;
                cfg.algorithms = Some(
                    list.iter()
                        .enumerate()
                        .map(|(i, v)| expect_str(v, &format!("algorithms[{i}]"))?.parse())
                        .collect::<CliResult<_>>()?,
                );
            }
            "horizon" => cfg.horizon = Some(expect_int(value, field)?),
            "seeds" => cfg.seeds = Some(expect_int(value, field)?),
            "base_seed" => cfg.base_seed = Some(expect_int(value, field)?),
            "seed_list" => {
                let list = value
                    .as_array()
                    .ok_or_else(|| CliError::config(field, "expected an array of integers"))?;
                let seeds = list
                    .iter()
                    .enumerate()
                    .map(|(i, v)| expect_int(v, &format!("seed_list[{i}]")))
                    .collect::<CliResult<Vec<_>>>()?;
                check_seed_list(&seeds)?;
                cfg.seed_list = Some(seeds);
            }
            "out" => cfg.out = Some(PathBuf::from(expect_str(value, field)?)),
            "emit_traces" => {
                cfg.emit_traces = Some(
                    value
                        .as_bool()
                        .ok_or_else(|| CliError::config(field, "expected a boolean"))?,
                )
            }
            "optimizer" => cfg.optimizer = parse_optimizer(expect_table(value, field)?)?,
            "validate" => cfg.validate = parse_validate(expect_table(value, field)?)?,
            _ => return Err(CliError::config(field, "unknown field")),
        }
    }
    Ok(cfg)
}

fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::MissingFile {
        path: path.to_owned(),
        source,
    })
}

/// Reads a configuration file; a relative instance path is taken relative
/// to the file's directory.
pub fn load_config(path: &Path) -> CliResult<ConfigFile> {
    let mut cfg = parse_config_str(&read_file(path)?)?;
    if let Some(InstanceSource::Path(p)) = &mut cfg.instance {
        if p.is_relative() {
            if let Some(dir) = path.parent() {
                *p = dir.join(&*p);
            }
        }
    }
    Ok(cfg)
}

pub fn load_instance(source: &InstanceSource) -> CliResult<(BanditInstance, String)> {
    match source {
        InstanceSource::Inline(inst) => Ok((inst.clone(), "inline".to_owned())),
        InstanceSource::Path(path) => {
            let text = read_file(path)?;
            let inst = nswbandit::parse_instance(&text).map_err(|e| match e {
                nswbandit::Error::Parse { field, message } => CliError::config(
                    format!("instance ({})", path.display()),
                    format!("{field}: {message}"),
                ),
                other => CliError::config(format!("instance ({})", path.display()), other.to_string()),
            })?;
            let id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "instance".to_owned());
            Ok((inst, id))
        }
    }
}

impl ConfigFile {
    /// Fields set in `over` replace those in `self`.
    pub fn merge(self, over: ConfigFile) -> ConfigFile {
        ConfigFile {
            instance: over.instance.or(self.instance),
            algo: over.algo.or(self.algo),
            mode: over.mode.or(self.mode),
            algorithms: over.algorithms.or(self.algorithms),
            horizon: over.horizon.or(self.horizon),
            seeds: over.seeds.or(self.seeds),
            base_seed: over.base_seed.or(self.base_seed),
            seed_list: over.seed_list.or(self.seed_list),
            out: over.out.or(self.out),
            emit_traces: over.emit_traces.or(self.emit_traces),
            optimizer: OptimizerOverrides {
                max_iterations: over.optimizer.max_iterations.or(self.optimizer.max_iterations),
                step_init: over.optimizer.step_init.or(self.optimizer.step_init),
                tolerance: over.optimizer.tolerance.or(self.optimizer.tolerance),
                restarts: over.optimizer.restarts.or(self.optimizer.restarts),
                utility_floor: over.optimizer.utility_floor.or(self.optimizer.utility_floor),
                restart_seed: over.optimizer.restart_seed.or(self.optimizer.restart_seed),
            },
            validate: ValidateOverrides {
                seed: over.validate.seed.or(self.validate.seed),
                samples: over.validate.samples.or(self.validate.samples),
                oracle_instances: over.validate.oracle_instances.or(self.validate.oracle_instances),
                clean_event_seeds: over.validate.clean_event_seeds.or(self.validate.clean_event_seeds),
            },
        }
    }

    /// Seeds from `seed_list`, or `base_seed .. base_seed + seeds`.
    pub fn seed_values(&self) -> CliResult<Vec<u64>> {
        if let Some(list) = &self.seed_list {
            check_seed_list(list)?;
            return Ok(list.clone());
        }
        let count = self.seeds.unwrap_or(DEFAULT_SEED_COUNT);
        if count == 0 {
            return Err(CliError::config("seeds", "at least one seed is required"));
        }
        let base = self.base_seed.unwrap_or(0);
        let end = base
            .checked_add(count)
            .ok_or_else(|| CliError::config("seeds", "seed range overflows u64"))?;
        Ok((base..end).collect())
    }

    /// Checks and completes the configuration for `run` (one algorithm) or
    /// `sweep` (the `algorithms` list, falling back to `algo`).
    pub fn resolve(&self, sweep: bool) -> CliResult<Experiment> {
        let source = self
            .instance
            .as_ref()
            .ok_or_else(|| CliError::config("instance", "no instance given"))?;
        let (instance, instance_id) = load_instance(source)?;
        let horizon = self
            .horizon
            .ok_or_else(|| CliError::config("horizon", "no horizon given"))?;
        if horizon == 0 {
            return Err(CliError::config("horizon", "must be >= 1"));
        }
        let default_mode = self.mode.unwrap_or(ScheduleMode::A);
        let specs: Vec<AlgoSpec> = if sweep {
            match (&self.algorithms, self.algo) {
                (Some(list), _) => list.clone(),
                (None, Some(a)) => vec![a],
                (None, None) => Vec::new(),
            }
        } else {
            vec![self
                .algo
                .ok_or_else(|| CliError::config("algo", "no algorithm given"))?]
        };
        if specs.is_empty() {
            return Err(CliError::config("algorithms", "at least one algorithm is required"));
        }
        let agents = specs
            .iter()
            .map(|s| {
                let kind = s
                    .agent_kind(default_mode, &instance, horizon)
                    .map_err(as_config("horizon"))?;
                Ok((label(s, default_mode), kind))
            })
            .collect::<CliResult<Vec<_>>>()?;
        Ok(Experiment {
            instance,
            instance_id,
            agents,
            horizon,
            seeds: self.seed_values()?,
            optimizer: self.optimizer.apply(OptimizerConfig::in_loop())?,
            out: self.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
            emit_traces: self.emit_traces.unwrap_or(false),
        })
    }
}

fn label(spec: &AlgoSpec, default_mode: ScheduleMode) -> String {
    format!("{}-{}", spec.algo.as_str(), spec.mode.unwrap_or(default_mode))
}

/// A fully checked run or sweep.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub instance: BanditInstance,
    pub instance_id: String,
    /// `(label, agent)` pairs; `run` has exactly one.
    pub agents: Vec<(String, AgentKind)>,
    pub horizon: u64,
    pub seeds: Vec<u64>,
    pub optimizer: OptimizerConfig,
    pub out: PathBuf,
    pub emit_traces: bool,
}

#[derive(Serialize)]
struct Canonical<'a> {
    command: &'a str,
    instance: String,
    agents: Vec<String>,
    horizon: u64,
    seeds: &'a [u64],
    optimizer: [String; 6],
    emit_traces: bool,
}

impl Experiment {
    /// SHA-256 (hex) of a canonical rendering of everything that affects the
    /// numbers, excluding the output directory.
    pub fn config_hash(&self, command: &str) -> String {
        let o = &self.optimizer;
        let canonical = Canonical {
            command,
            instance: self.instance.to_toml_string(),
            agents: self.agents.iter().map(|(l, k)| format!("{l}={k}")).collect(),
            horizon: self.horizon,
            seeds: &self.seeds,
            optimizer: [
                o.max_iterations.to_string(),
                format!("{:?}", o.step_init),
                format!("{:?}", o.tolerance),
                o.restarts.to_string(),
                format!("{:?}", o.utility_floor),
                o.restart_seed.to_string(),
            ],
            emit_traces: self.emit_traces,
        };
        let text = toml::to_string(&canonical).expect("canonical config is plain data");
        crate::sha256_hex(text.as_bytes())
    }
}
