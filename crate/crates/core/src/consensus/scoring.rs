//! Contribution scores and the seeded weighted draw.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::MinerId;
use crate::hash::{double_sha256_parts, Hash256};
use crate::training::TrainingReport;

/// Tolerance on `sum(weights) == 1`.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// Raw, server-measured inputs to scoring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContributionMetrics {
    pub miner_id: MinerId,
    /// Parameter volume: credited parameters times credited steps.
    pub param_volume: f64,
    /// Clipped validation loss reduction.
    pub loss_delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContributionScore {
    pub miner_id: MinerId,
    pub param_component: f64,
    pub loss_component: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub scores: Vec<ContributionScore>,
    /// No miner earned anything; weights fell back to uniform.
    pub degenerate: bool,
}

impl ScoreTable {
    pub fn weights(&self) -> Vec<f64> {
        self.scores.iter().map(|s| s.weight).collect()
    }
}

fn shares(values: impl Iterator<Item = f64> + Clone) -> Vec<f64> {
    let total: f64 = values.clone().sum();
    values.map(|v| if total > 0.0 { v / total } else { 0.0 }).collect()
}

/// Normalized convex combination of the two contribution measures.
///
/// Each measure is divided by its total across miners, then mixed as
/// `alpha * param + (1 - alpha) * loss`. If one measure is zero for
/// everybody the mix is renormalized so weights still sum to one; if both
/// are, every miner gets `1 / k`. Negative inputs count as zero.
pub fn score_contribution(metrics: &[ContributionMetrics], alpha: f64) -> ScoreTable {
    let params = shares(metrics.iter().map(|m| m.param_volume.max(0.0)));
    let losses = shares(metrics.iter().map(|m| m.loss_delta.max(0.0)));
    let raw: Vec<f64> = params.iter().zip(&losses).map(|(p, l)| alpha * p + (1.0 - alpha) * l).collect();
    let total: f64 = raw.iter().sum();
    let degenerate = total.is_nan() || total <= 0.0;
    let uniform = 1.0 / metrics.len().max(1) as f64;
    let scores = metrics
        .iter()
        .zip(params.iter().zip(&losses).zip(&raw))
        .map(|(m, ((&param_component, &loss_component), &r))| ContributionScore {
            miner_id: m.miner_id,
            param_component,
            loss_component,
            weight: if degenerate { uniform } else { r / total },
        })
        .collect();
    ScoreTable { scores, degenerate }
}

/// `double_sha256(cycle_id_be || report_0 || report_1 || ...)` over
/// canonical report encodings in miner-id order.
pub fn lottery_seed_from_encoded<B: AsRef<[u8]>>(cycle_id: u64, encoded_reports: &[B]) -> Hash256 {
    let cycle = cycle_id.to_be_bytes();
    let mut parts: Vec<&[u8]> = Vec::with_capacity(encoded_reports.len() + 1);
    parts.push(&cycle);
    parts.extend(encoded_reports.iter().map(AsRef::as_ref));
    double_sha256_parts(&parts)
}

/// Seed for the cycle's draw, computed from the accepted reports sorted by
/// miner id.
pub fn lottery_seed(cycle_id: u64, reports: &[TrainingReport]) -> Hash256 {
    debug_assert!(reports.windows(2).all(|w| w[0].miner_id < w[1].miner_id), "reports not in miner-id order");
    let encoded: Vec<Vec<u8>> = reports.iter().map(TrainingReport::to_bytes).collect();
    lottery_seed_from_encoded(cycle_id, &encoded)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LotteryError {
    #[error("no participants")]
    Empty,
    #[error("all weights are zero")]
    DegenerateWeights,
    #[error("weights must be finite, non-negative and sum to 1 (sum = {sum})")]
    InvalidWeights { sum: f64 },
}

/// Smallest index whose cumulative weight exceeds `u = seed / 2^256`.
pub fn weighted_lottery(weights: &[f64], seed: &Hash256) -> Result<usize, LotteryError> {
    if weights.is_empty() {
        return Err(LotteryError::Empty);
    }
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(LotteryError::InvalidWeights { sum });
    }
    if weights.iter().all(|w| *w == 0.0) {
        return Err(LotteryError::DegenerateWeights);
    }
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(LotteryError::InvalidWeights { sum });
    }
    let u = seed.to_unit_interval();
    let mut cumulative = 0.0;
    for (i, w) in weights.iter().enumerate() {
        cumulative += w;
        if cumulative > u {
            return Ok(i);
        }
    }
    // Rounding left the total a hair under u; the last live entry wins.
    Ok(weights.iter().rposition(|w| *w > 0.0).expect("some weight is positive"))
}
