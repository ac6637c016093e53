//! The per-cycle audit record and the third-party checks run against it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{lottery_seed_from_encoded, score_contribution, weighted_lottery, ContributionMetrics, MinerId};
use crate::certificate::verify_certificate;
use crate::crypto::{sign, verify, KeyPair, PublicKey, Signature};
use crate::hash::Hash256;
use crate::ledger::Block;
use crate::training::TrainingReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleStatus {
    Committed,
    Failed,
}

/// One registered miner's line in the record. Non-finite losses are
/// written as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinerRecord {
    pub miner_id: MinerId,
    pub pubkey: String,
    pub compute_budget: f64,
    pub shard_start: usize,
    pub shard_end: usize,
    pub steps_assigned: u64,
    pub submitted: bool,
    pub accepted: bool,
    /// Why a submission was thrown out before measurement, if it was.
    pub rejection: Option<String>,
    pub claimed_loss_before: Option<f64>,
    pub claimed_loss_after: Option<f64>,
    pub claimed_steps: Option<u64>,
    pub measured_loss_after: Option<f64>,
    pub params_trained: u64,
    pub steps_credited: u64,
    pub param_volume: u64,
    pub loss_delta: f64,
    pub param_component: f64,
    pub loss_component: f64,
    pub weight: f64,
    pub contribution_certificate: Option<Hash256>,
}

impl MinerRecord {
    /// Loss the certificates attest to: the measurement if the shard was
    /// accepted, otherwise no change.
    pub fn credited_loss_after(&self, loss_before: f64) -> f64 {
        match (self.accepted, self.measured_loss_after) {
            (true, Some(m)) => m,
            _ => loss_before,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewardDelta {
    pub miner_id: MinerId,
    pub amount: u64,
}

/// Everything published about one cycle: enough for anybody to recompute
/// the whole draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle_id: u64,
    pub status: CycleStatus,
    pub failure: Option<String>,
    pub alpha: f64,
    /// Server-measured validation loss of the cycle's base model.
    pub loss_before: Option<f64>,
    pub degenerate: bool,
    pub miners: Vec<MinerRecord>,
    /// Hex encodings of accepted reports in miner-id order.
    pub published_reports: Vec<String>,
    pub lottery_seed: Option<Hash256>,
    pub winner_id: Option<MinerId>,
    pub certificate_hash: Option<Hash256>,
    pub block_hash: Option<Hash256>,
    pub model_commitment: Option<Hash256>,
    pub reward: Option<RewardDelta>,
    /// Validators that voted on the proposed block, by verdict.
    pub accepted_by: Vec<MinerId>,
    pub rejected_by: Vec<MinerId>,
    /// Double-SHA-256 evaluations spent producing the block.
    pub hash_ops: u64,
    /// Training and server evaluation work behind accepted reports.
    pub training_flops: u64,
}

impl CycleRecord {
    pub fn is_committed(&self) -> bool {
        self.status == CycleStatus::Committed
    }

    pub fn miner(&self, id: MinerId) -> Option<&MinerRecord> {
        self.miners.iter().find(|m| m.miner_id == id)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

const RECORD_DOMAIN: &[u8] = b"trainchain/cycle-record/v1";

/// Server signature over the exact bytes of a published record line.
pub fn sign_record_line(server_key: &KeyPair, line: &str) -> Signature {
    sign(server_key, &[RECORD_DOMAIN, line.as_bytes()].concat())
}

pub fn verify_record_line(server_pubkey: &PublicKey, line: &str, signature: &Signature) -> bool {
    verify(server_pubkey, &[RECORD_DOMAIN, line.as_bytes()].concat(), signature)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuditError {
    #[error("record is missing {0}")]
    Missing(&'static str),
    #[error("published report {index} is malformed: {reason}")]
    MalformedReport { index: usize, reason: String },
    #[error("miner {miner_id}: {what} does not follow from published data")]
    MinerMismatch { miner_id: MinerId, what: &'static str },
    #[error("{0} does not match the recomputation")]
    Mismatch(&'static str),
    #[error("block: {0}")]
    Block(String),
}

fn decode_reports(record: &CycleRecord) -> Result<Vec<(Vec<u8>, TrainingReport)>, AuditError> {
    record
        .published_reports
        .iter()
        .enumerate()
        .map(|(index, h)| {
            let bytes = hex::decode(h).map_err(|e| AuditError::MalformedReport { index, reason: e.to_string() })?;
            let report = TrainingReport::from_bytes(&bytes)
                .map_err(|e| AuditError::MalformedReport { index, reason: e.to_string() })?;
            Ok((bytes, report))
        })
        .collect()
}

/// Recomputes credits and the draw from the record alone.
/// Only committed cycles are fully auditable; a failed record passes if
/// whatever it does publish is consistent.
pub fn audit_record(record: &CycleRecord) -> Result<(), AuditError> {
    let Some(loss_before) = record.loss_before else {
        return if record.is_committed() { Err(AuditError::Missing("loss_before")) } else { Ok(()) };
    };
    let reports = decode_reports(record)?;
    if !reports.windows(2).all(|w| w[0].1.miner_id < w[1].1.miner_id) {
        return Err(AuditError::Mismatch("published report order"));
    }
    let accepted: Vec<&MinerRecord> = record.miners.iter().filter(|m| m.accepted).collect();
    if accepted.len() != reports.len() {
        return Err(AuditError::Mismatch("number of published reports"));
    }
    for m in &record.miners {
        let bad = |what| AuditError::MinerMismatch { miner_id: m.miner_id, what };
        let (params, steps, delta) = if m.accepted {
            let (_, report) = reports.iter().find(|(_, r)| r.miner_id == m.miner_id).ok_or(bad("published report"))?;
            if (report.shard.range.start, report.shard.range.end) != (m.shard_start, m.shard_end) {
                return Err(bad("shard range"));
            }
            let measured = m.measured_loss_after.ok_or(bad("measured loss"))?;
            let steps = report.steps_used.min(m.steps_assigned);
            ((m.shard_end - m.shard_start) as u64, steps, (loss_before - measured).max(0.0))
        } else {
            (0, 0, 0.0)
        };
        if m.params_trained != params {
            return Err(bad("params_trained"));
        }
        if m.steps_credited != steps {
            return Err(bad("steps_credited"));
        }
        if m.param_volume != params * steps {
            return Err(bad("param_volume"));
        }
        if m.loss_delta.to_bits() != delta.to_bits() {
            return Err(bad("loss_delta"));
        }
    }

    let metrics: Vec<ContributionMetrics> = record
        .miners
        .iter()
        .map(|m| ContributionMetrics {
            miner_id: m.miner_id,
            param_volume: m.param_volume as f64,
            loss_delta: m.loss_delta,
        })
        .collect();
    let table = score_contribution(&metrics, record.alpha);
    if table.degenerate != record.degenerate {
        return Err(AuditError::Mismatch("degenerate flag"));
    }
    for (m, s) in record.miners.iter().zip(&table.scores) {
        let same = |a: f64, b: f64| a.to_bits() == b.to_bits();
        if !(same(m.param_component, s.param_component)
            && same(m.loss_component, s.loss_component)
            && same(m.weight, s.weight))
        {
            return Err(AuditError::MinerMismatch { miner_id: m.miner_id, what: "score" });
        }
    }

    let encoded: Vec<&[u8]> = reports.iter().map(|(b, _)| b.as_slice()).collect();
    let seed = lottery_seed_from_encoded(record.cycle_id, &encoded);
    match record.lottery_seed {
        Some(s) if s == seed => {}
        Some(_) => return Err(AuditError::Mismatch("lottery seed")),
        None if record.is_committed() => return Err(AuditError::Missing("lottery_seed")),
        None => return Ok(()),
    }
    let index = weighted_lottery(&table.weights(), &seed).map_err(|_| AuditError::Mismatch("lottery weights"))?;
    match record.winner_id {
        Some(w) if w == record.miners[index].miner_id => Ok(()),
        Some(_) => Err(AuditError::Mismatch("winner")),
        None if record.is_committed() => Err(AuditError::Missing("winner_id")),
        None => Ok(()),
    }
}

/// Checks that `block` is the one the record describes and that its
/// certificate binds the winner's published measurements.
pub fn audit_block(record: &CycleRecord, block: &Block, server_pubkey: &PublicKey) -> Result<(), AuditError> {
    let fail = |s: &str| AuditError::Block(s.to_string());
    if !record.is_committed() {
        return Err(fail("record describes a failed cycle"));
    }
    if record.block_hash != Some(block.hash()) {
        return Err(fail("block hash differs from record"));
    }
    let cert = block.certificate.as_ref().ok_or_else(|| fail("no certificate"))?;
    if record.certificate_hash != Some(cert.hash()) {
        return Err(fail("certificate hash differs from record"));
    }
    if !verify_certificate(server_pubkey, cert) {
        return Err(fail("certificate signature invalid"));
    }
    let winner = record.winner_id.and_then(|w| record.miner(w)).ok_or(AuditError::Missing("winner"))?;
    let loss_before = record.loss_before.ok_or(AuditError::Missing("loss_before"))?;
    if cert.miner_pubkey_hex() != winner.pubkey {
        return Err(fail("certificate issued to someone other than the winner"));
    }
    if cert.cycle_id != record.cycle_id
        || cert.params_trained != winner.params_trained
        || cert.loss_before.to_bits() != loss_before.to_bits()
        || cert.loss_after.to_bits() != winner.credited_loss_after(loss_before).to_bits()
    {
        return Err(fail("certificate measures differ from the winner's record"));
    }
    Ok(())
}
