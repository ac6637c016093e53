//! The useful work: a small regression model whose flat parameter vector is
//! split into contiguous shards, each trained by one miner with SGD while the
//! other coordinates stay frozen.

mod cost;
mod data;
mod model;
mod sgd;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certificate::ContributionMeasures;
use crate::codec::{DecodeError, Reader, Writer};

pub use cost::{eval_flops, forward_flops, gradient_flops, sgd_flops, update_flops};
pub use data::{make_synthetic_dataset, Dataset, SyntheticTask};
pub use model::{evaluate_loss, gradient, init_params, predict};
pub use sgd::{assemble_model, partition_even, partition_model, sgd_train, SgdOutcome};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainingError {
    #[error("{miners} miners cannot share {params} parameters")]
    TooManyMiners { miners: usize, params: usize },
    #[error("loss is not finite")]
    NonFiniteLoss,
    #[error("parameters diverged after {steps_used} steps")]
    DivergenceDetected { steps_used: u64 },
    #[error("shards overlap at parameter {index}")]
    OverlappingShards { index: usize },
    #[error("range [{start}, {end}) invalid for {len} parameters")]
    InvalidRange { start: usize, end: usize, len: usize },
    #[error("expected {expected} parameters, got {actual}")]
    ParameterCount { expected: usize, actual: usize },
    #[error("malformed dataset: {0}")]
    MalformedDataset(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Architecture {
    /// `y = w . x + b`.
    Linear,
    /// `y = w2 . tanh(W1 x + b1) + b2`.
    TwoLayer { hidden: usize },
}

/// Model shape. Flat parameter layout:
///
/// * `Linear`: `[w_0 .. w_{d-1}, b]`.
/// * `TwoLayer`: `W1` row-major (`h x d`), then `b1` (h), `w2` (h), `b2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelSpec {
    pub input_dim: usize,
    pub architecture: Architecture,
}

impl ModelSpec {
    pub fn linear(input_dim: usize) -> Self {
        ModelSpec { input_dim, architecture: Architecture::Linear }
    }

    pub fn two_layer(input_dim: usize, hidden: usize) -> Self {
        ModelSpec { input_dim, architecture: Architecture::TwoLayer { hidden } }
    }

    pub fn parameter_count(&self) -> usize {
        let d = self.input_dim;
        match self.architecture {
            Architecture::Linear => d + 1,
            Architecture::TwoLayer { hidden: h } => d * h + h + h + 1,
        }
    }
}

/// Half-open index range into the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ShardRange {
    pub start: usize,
    pub end: usize,
}

impl ShardRange {
    pub fn new(start: usize, end: usize) -> Self {
        ShardRange { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, index: usize) -> bool {
        (self.start..self.end).contains(&index)
    }

    pub fn check_within(&self, len: usize) -> Result<(), TrainingError> {
        if self.start < self.end && self.end <= len {
            Ok(())
        } else {
            Err(TrainingError::InvalidRange { start: self.start, end: self.end, len })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterShard {
    pub range: ShardRange,
    pub values: Vec<f64>,
}

impl ParameterShard {
    /// Copies `range` out of a full parameter vector.
    pub fn extract(params: &[f64], range: ShardRange) -> Self {
        ParameterShard { range, values: params[range.start..range.end].to_vec() }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// What a miner uploads at the end of a cycle. Loss and step figures are
/// the miner's own claims; the server re-measures before crediting.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    pub miner_id: u32,
    pub shard: ParameterShard,
    pub params_trained: u64,
    pub loss_before: f64,
    pub loss_after: f64,
    pub steps_used: u64,
}

/// Upper bound on shard length accepted by the decoder.
const MAX_SHARD_LEN: usize = 1 << 24;

impl TrainingReport {
    pub fn measures(&self) -> ContributionMeasures {
        ContributionMeasures {
            params_trained: self.params_trained,
            loss_before: self.loss_before,
            loss_after: self.loss_after,
        }
    }

    /// `miner_id u32 | start u64 | end u64 | values f64 x len |
    /// params_trained u64 | loss_before f64 | loss_after f64 | steps_used u64`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::with_capacity(4 + 16 + 8 * self.shard.values.len() + 32);
        w.u32(self.miner_id).u64(self.shard.range.start as u64).u64(self.shard.range.end as u64);
        for v in &self.shard.values {
            w.f64(*v);
        }
        w.u64(self.params_trained).f64(self.loss_before).f64(self.loss_after).u64(self.steps_used);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let miner_id = r.u32()?;
        let start = r.u64()? as usize;
        let end = r.u64()? as usize;
        if start >= end || end - start > MAX_SHARD_LEN {
            return Err(DecodeError::invalid("shard range", format!("[{start}, {end})")));
        }
        let values = (start..end).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
        let report = TrainingReport {
            miner_id,
            shard: ParameterShard { range: ShardRange::new(start, end), values },
            params_trained: r.u64()?,
            loss_before: r.f64()?,
            loss_after: r.f64()?,
            steps_used: r.u64()?,
        };
        r.finish()?;
        Ok(report)
    }
}
