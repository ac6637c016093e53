//! Scenario configuration: a strict TOML schema.
//!
//! ```toml
//! seed = 7
//! cycles = 20
//!
//! [[miners]]
//! behavior = "honest"        # honest | lazy | falsifier | offline
//! compute_budget = 1.0
//!
//! [model]
//! architecture = "linear"    # linear | two_layer
//! input_dim = 4
//! # hidden = 8               # two_layer only
//!
//! [dataset]
//! n_examples = 200
//! noise_std = 0.1
//!
//! [cycle]
//! steps = 40
//! alpha = 0.5                # optional, default 0.5
//! reward = 50
//! learning_rate = 0.05
//! batch_size = 32
//!
//! [network]                  # optional, default 0..=2 ticks
//! latency_min = 0
//! latency_max = 2
//!
//! [pow_baseline]
//! enabled = true
//! difficulty_bits = 8
//! max_attempts = 1000000
//!
//! [usefulness]               # optional, default 1.0
//! per_hash_op_cost = 1.0
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Unknown keys are rejected. An optional `[faults]` table with
//! `corrupt_certificate_cycles = [..]` tampers with the winner's block in
//! the listed cycles; it exists for validation tests.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consensus::CycleConfig;
use crate::training::ModelSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid value for `{field}`: {message}")]
    Validation { field: &'static str, message: String },
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation { field, message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    Honest,
    /// Returns its shard untouched.
    Lazy,
    /// Returns random weights and fabricated metrics.
    Falsifier,
    /// Registers, then never answers.
    Offline,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinerConfig {
    pub behavior: Behavior,
    pub compute_budget: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchitectureKind {
    Linear,
    TwoLayer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub architecture: ArchitectureKind,
    pub input_dim: usize,
    pub hidden: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub n_examples: usize,
    pub noise_std: f64,
}

fn default_alpha() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleSection {
    pub steps: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub reward: u64,
    pub learning_rate: f64,
    pub batch_size: usize,
}

fn default_latency_max() -> u64 {
    2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    #[serde(default)]
    pub latency_min: u64,
    #[serde(default = "default_latency_max")]
    pub latency_max: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig { latency_min: 0, latency_max: default_latency_max() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowBaselineConfig {
    pub enabled: bool,
    pub difficulty_bits: u32,
    pub max_attempts: u64,
}

fn default_hash_cost() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UsefulnessConfig {
    #[serde(default = "default_hash_cost")]
    pub per_hash_op_cost: f64,
}

impl Default for UsefulnessConfig {
    fn default() -> Self {
        UsefulnessConfig { per_hash_op_cost: default_hash_cost() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultConfig {
    #[serde(default)]
    pub corrupt_certificate_cycles: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub cycles: u64,
    pub miners: Vec<MinerConfig>,
    pub model: ModelConfig,
    pub dataset: DatasetConfig,
    pub cycle: CycleSection,
    #[serde(default)]
    pub network: NetworkConfig,
    pub pow_baseline: PowBaselineConfig,
    #[serde(default)]
    pub usefulness: UsefulnessConfig,
    pub output: OutputConfig,
    #[serde(default)]
    pub faults: FaultConfig,
}

fn line_column(source: &str, offset: usize) -> (usize, usize) {
    let before = &source[..offset.min(source.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

impl ScenarioConfig {
    pub fn from_toml_str(source: &str) -> Result<Self, ConfigError> {
        let config: ScenarioConfig = toml::from_str(source).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_column(source, s.start));
            ConfigError::Parse { line, column, message: e.message().to_string() }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn model_spec(&self) -> ModelSpec {
        match self.model.architecture {
            ArchitectureKind::Linear => ModelSpec::linear(self.model.input_dim),
            ArchitectureKind::TwoLayer => ModelSpec::two_layer(self.model.input_dim, self.model.hidden.unwrap_or(0)),
        }
    }

    pub fn cycle_config(&self) -> CycleConfig {
        CycleConfig {
            cycle_steps: self.cycle.steps,
            alpha: self.cycle.alpha,
            reward: self.cycle.reward,
            learning_rate: self.cycle.learning_rate,
            batch_size: self.cycle.batch_size,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.cycles == 0 {
            return Err(invalid("cycles", "must be at least 1"));
        }
        if self.miners.is_empty() {
            return Err(invalid("miners", "at least one miner is required"));
        }
        if self.miners.len() > u32::MAX as usize {
            return Err(invalid("miners", "too many miners"));
        }
        if self.miners.iter().any(|m| !(m.compute_budget.is_finite() && m.compute_budget >= 0.0)) {
            return Err(invalid("miners.compute_budget", "must be finite and non-negative"));
        }
        if self.model.input_dim == 0 {
            return Err(invalid("model.input_dim", "must be positive"));
        }
        match (self.model.architecture, self.model.hidden) {
            (ArchitectureKind::TwoLayer, None | Some(0)) => {
                return Err(invalid("model.hidden", "two_layer needs a positive hidden width"))
            }
            (ArchitectureKind::Linear, Some(_)) => return Err(invalid("model.hidden", "only applies to two_layer")),
            _ => {}
        }
        if self.dataset.n_examples < 2 {
            return Err(invalid("dataset.n_examples", "must be at least 2"));
        }
        if !(self.dataset.noise_std.is_finite() && self.dataset.noise_std >= 0.0) {
            return Err(invalid("dataset.noise_std", "must be finite and non-negative"));
        }
        if !(0.0..=1.0).contains(&self.cycle.alpha) {
            return Err(invalid("cycle.alpha", format!("{} is outside [0, 1]", self.cycle.alpha)));
        }
        if !(self.cycle.learning_rate.is_finite() && self.cycle.learning_rate >= 0.0) {
            return Err(invalid("cycle.learning_rate", "must be finite and non-negative"));
        }
        if self.cycle.batch_size == 0 {
            return Err(invalid("cycle.batch_size", "must be positive"));
        }
        if self.network.latency_min > self.network.latency_max {
            return Err(invalid("network.latency_min", "exceeds latency_max"));
        }
        if self.network.latency_max > 1_000_000 {
            return Err(invalid("network.latency_max", "must be at most 1000000 ticks"));
        }
        if self.pow_baseline.difficulty_bits > 256 {
            return Err(invalid("pow_baseline.difficulty_bits", "must be at most 256"));
        }
        if self.pow_baseline.enabled && self.pow_baseline.max_attempts == 0 {
            return Err(invalid("pow_baseline.max_attempts", "must be positive"));
        }
        if !(self.usefulness.per_hash_op_cost.is_finite() && self.usefulness.per_hash_op_cost > 0.0) {
            return Err(invalid("usefulness.per_hash_op_cost", "must be finite and positive"));
        }
        if self.output.dir.as_os_str().is_empty() {
            return Err(invalid("output.dir", "must not be empty"));
        }
        Ok(())
    }
}

/// Reads and validates a scenario file.
pub fn parse_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let source =
        std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    ScenarioConfig::from_toml_str(&source)
}
