//! Experiment configuration files.

use std::path::{Path, PathBuf};

use qcoord::config::{builtin, ModelFile};
use qcoord::model::NetworkKind;
use qcoord::optimizer::OptimizerOptions;
use qcoord::protocol::{Engine, SimSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::failure::{Failure, Outcome};

pub const EXPERIMENT_SCHEMA: &str = "qcoord.experiment/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Rate,
    Optimize,
    Simulate,
    Derandomize,
    Converse,
    Sweep,
}

/// Exactly one of `builtin`, `path` or `inline`. Paths are relative to the
/// experiment file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelRef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    /// Family parameter for builtins that take one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inline: Option<ModelFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeBlock {
    #[serde(default = "two_node")]
    pub kind: NetworkKind,
    #[serde(default)]
    pub options: OptimizerOptions,
}

fn two_node() -> NetworkKind {
    NetworkKind::TwoNode
}

impl Default for OptimizeBlock {
    fn default() -> Self {
        Self {
            kind: NetworkKind::TwoNode,
            options: OptimizerOptions::default(),
        }
    }
}

/// Simulation grid: one cell per `(n, rate)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationBlock {
    pub n: Vec<usize>,
    pub rate: Vec<f64>,
    pub delta: f64,
    pub trials: usize,
    #[serde(default)]
    pub engine: Engine,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate0_z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DerandomizeBlock {
    pub seeds: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_epsilon() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConverseBlock {
    #[serde(default = "default_slack")]
    pub slack: f64,
}

fn default_slack() -> f64 {
    0.02
}

impl Default for ConverseBlock {
    fn default() -> Self {
        Self { slack: default_slack() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParameter {
    /// Family parameter of a builtin model.
    P,
    /// Weight on `I(X;Z)` in the cascade optimizer objective.
    Lambda,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: String,
    pub command: Command,
    pub model: ModelRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimize: Option<OptimizeBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derandomize: Option<DerandomizeBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converse: Option<ConverseBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepBlock>,
}

/// A parsed experiment with its model resolved and its hash computed. A `p`
/// sweep has no single model; each grid point resolves its own.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub resolved: Option<ModelFile>,
    pub hash: String,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Outcome<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| Failure::parse(format!("experiment config: {e}")))?;
        if c.schema != EXPERIMENT_SCHEMA {
            return Err(Failure::parse(format!(
                "unsupported schema `{}`, expected `{EXPERIMENT_SCHEMA}`",
                c.schema
            )));
        }
        let block_missing = |name: &str| Failure::parse(format!("`{}` needs a `{name}` block", c.command_name()));
        match c.command {
            Command::Simulate | Command::Converse if c.simulation.is_none() => return Err(block_missing("simulation")),
            Command::Derandomize if c.simulation.is_none() => return Err(block_missing("simulation")),
            Command::Derandomize if c.derandomize.is_none() => return Err(block_missing("derandomize")),
            Command::Sweep if c.sweep.is_none() => return Err(block_missing("sweep")),
            _ => {}
        }
        Ok(c)
    }

    fn command_name(&self) -> String {
        serde_json::to_value(self.command)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default()
    }

    /// The model for family parameter `param`, falling back to the one in
    /// the reference.
    pub fn resolve_model(&self, base: &Path, param: Option<f64>) -> Outcome<ModelFile> {
        let m = &self.model;
        let given = [m.builtin.is_some(), m.path.is_some(), m.inline.is_some()];
        if given.iter().filter(|&&b| b).count() != 1 {
            return Err(Failure::parse("model needs exactly one of `builtin`, `path`, `inline`"));
        }
        if let Some(name) = &m.builtin {
            return Ok(builtin(name, param.or(m.param))?);
        }
        if param.is_some() || m.param.is_some() {
            return Err(Failure::parse("`param` applies to builtin models only"));
        }
        if let Some(path) = &m.path {
            let full = base.join(path);
            let text = std::fs::read_to_string(&full).map_err(|e| Failure::io(full.display(), e))?;
            return Ok(ModelFile::parse(&text)?);
        }
        let inline = m.inline.clone().expect("one reference is present");
        // Round-trip through the text parser so inline models get its checks.
        Ok(ModelFile::parse(&inline.to_json())?)
    }
}

impl SimulationBlock {
    pub fn cells(&self) -> Vec<(usize, f64)> {
        self.n
            .iter()
            .flat_map(|&n| self.rate.iter().map(move |&r| (n, r)))
            .collect()
    }

    pub fn spec(&self, n: usize, rate: f64, seed: u64) -> SimSpec {
        SimSpec {
            n,
            delta: self.delta,
            seed,
            trials: self.trials,
            engine: self.engine,
            gamma_factor: self.gamma_factor,
            rate,
            rate0: self.rate0,
            rate_z: self.rate_z,
            rate0_z: self.rate0_z,
        }
    }
}

impl Experiment {
    /// Reads and resolves an experiment. `seed` overrides the file's seed.
    pub fn load(path: &Path, seed: Option<u64>) -> Outcome<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path.display(), e))?;
        let mut config = ExperimentConfig::parse(&text)?;
        if seed.is_some() {
            config.seed = seed;
        }
        let base = path.parent().unwrap_or(Path::new("."));
        let resolved = match &config.sweep {
            Some(s) if config.command == Command::Sweep && s.parameter == SweepParameter::P => {
                if config.model.builtin.is_none() {
                    return Err(Failure::parse("a `p` sweep needs a builtin model family"));
                }
                None
            }
            _ => Some(config.resolve_model(base, None)?),
        };
        let hash = config_hash(&config, resolved.as_ref());
        Ok(Self { config, resolved, hash })
    }

    pub fn model(&self) -> Outcome<&ModelFile> {
        self.resolved
            .as_ref()
            .ok_or_else(|| Failure::parse("this command needs a single model"))
    }

    pub fn seed(&self) -> u64 {
        self.config.seed.unwrap_or(0)
    }
}

/// SHA-256 over the effective configuration and the resolved model, so the
/// hash changes with a seed override or an edited model file but not with
/// whitespace in the experiment file.
pub fn config_hash(config: &ExperimentConfig, model: Option<&ModelFile>) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_string(config).expect("configs serialize").as_bytes());
    if let Some(m) = model {
        h.update([0]);
        h.update(serde_json::to_string(m).expect("models serialize").as_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
