use super::ConsensusError;
use crate::training::{assemble_model, evaluate_loss, Dataset, ModelSpec, ShardRange, TrainingReport};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportEvaluation {
    /// The shard changed and the merged model has a finite validation loss.
    pub accepted: bool,
    /// Server-side validation loss of `base` with the submitted shard
    /// written in; `None` when it is not finite.
    pub measured_loss_after: Option<f64>,
}

/// Re-measures a miner's submission on the held-out set. The loss the
/// miner claims is ignored.
pub fn evaluate_report(
    spec: &ModelSpec,
    report: &TrainingReport,
    assigned: ShardRange,
    base_params: &[f64],
    validation: &Dataset,
) -> Result<ReportEvaluation, ConsensusError> {
    let shard = &report.shard;
    if shard.range != assigned || shard.values.len() != assigned.len() {
        return Err(ConsensusError::ShardRangeMismatch {
            miner_id: report.miner_id,
            expected: assigned,
            actual: shard.range,
        });
    }
    let issued = &base_params[assigned.start..assigned.end];
    let changed = shard.values.iter().zip(issued).any(|(a, b)| a.to_bits() != b.to_bits());
    let measured = if shard.is_finite() {
        let merged = assemble_model(base_params, std::slice::from_ref(shard))?;
        evaluate_loss(spec, &merged, validation).ok()
    } else {
        None
    };
    Ok(ReportEvaluation { accepted: changed && measured.is_some(), measured_loss_after: measured })
}
