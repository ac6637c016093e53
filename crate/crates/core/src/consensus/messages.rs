//! Values exchanged between the coordinator and miners, with canonical
//! byte encodings so they can travel as opaque message payloads.

use super::MinerId;
use crate::certificate::{Certificate, CERTIFICATE_LEN};
use crate::codec::{DecodeError, Reader, Writer};
use crate::crypto::PublicKey;
use crate::hash::Hash256;
use crate::ledger::{merkle_root, Block, BlockHeader, LedgerError};
use crate::training::{Architecture, Dataset, ModelSpec, ShardRange, TrainingReport};

/// Upper bound on decoded vector lengths; anything bigger is garbage.
const MAX_ITEMS: usize = 1 << 24;

fn read_len(r: &mut Reader<'_>, field: &'static str) -> Result<usize, DecodeError> {
    let n = r.u64()? as usize;
    if n > MAX_ITEMS {
        return Err(DecodeError::invalid(field, format!("length {n}")));
    }
    Ok(n)
}

fn read_f64s(r: &mut Reader<'_>, n: usize) -> Result<Vec<f64>, DecodeError> {
    (0..n).map(|_| r.f64()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Registration {
    pub miner_id: MinerId,
    pub public_key: PublicKey,
    /// Declared step multiplier; the server grants `floor(steps * budget)`.
    pub compute_budget: f64,
}

impl Registration {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::with_capacity(4 + 33 + 8);
        w.u32(self.miner_id).bytes(&self.public_key.to_compressed()).f64(self.compute_budget);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let miner_id = r.u32()?;
        let public_key =
            PublicKey::from_compressed(&r.array()?).map_err(|e| DecodeError::invalid("public key", e.to_string()))?;
        let compute_budget = r.f64()?;
        r.finish()?;
        Ok(Registration { miner_id, public_key, compute_budget })
    }
}

/// Everything a miner needs for one cycle of shard training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTask {
    pub cycle_id: u64,
    pub miner_id: MinerId,
    pub model: ModelSpec,
    pub base_params: Vec<f64>,
    pub shard: ShardRange,
    pub steps: u64,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Seed for minibatch sampling.
    pub seed: u64,
    /// This miner's slice of the training set.
    pub partition: Dataset,
}

impl TrainingTask {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        let (arch, hidden) = match self.model.architecture {
            Architecture::Linear => (0u8, 0u32),
            Architecture::TwoLayer { hidden } => (1, hidden as u32),
        };
        w.u64(self.cycle_id).u32(self.miner_id).u32(self.model.input_dim as u32).u8(arch).u32(hidden);
        w.u64(self.base_params.len() as u64);
        for v in &self.base_params {
            w.f64(*v);
        }
        w.u64(self.shard.start as u64).u64(self.shard.end as u64);
        w.u64(self.steps).f64(self.learning_rate).u64(self.batch_size as u64).u64(self.seed);
        w.u64(self.partition.len() as u64);
        for (row, y) in self.partition.rows() {
            for v in row {
                w.f64(*v);
            }
            w.f64(y);
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let cycle_id = r.u64()?;
        let miner_id = r.u32()?;
        let input_dim = r.u32()? as usize;
        let architecture = match (r.u8()?, r.u32()? as usize) {
            (0, _) => Architecture::Linear,
            (1, hidden) => Architecture::TwoLayer { hidden },
            (tag, _) => return Err(DecodeError::invalid("architecture", format!("tag {tag}"))),
        };
        let n_params = read_len(&mut r, "parameter count")?;
        let base_params = read_f64s(&mut r, n_params)?;
        let shard = ShardRange::new(r.u64()? as usize, r.u64()? as usize);
        let steps = r.u64()?;
        let learning_rate = r.f64()?;
        let batch_size = r.u64()? as usize;
        let seed = r.u64()?;
        let rows = read_len(&mut r, "row count")?;
        if input_dim == 0 || input_dim > MAX_ITEMS || rows.saturating_mul(input_dim + 1) > MAX_ITEMS {
            return Err(DecodeError::invalid("partition", format!("{rows} rows of width {input_dim}")));
        }
        let mut features = Vec::with_capacity(rows * input_dim);
        let mut targets = Vec::with_capacity(rows);
        for _ in 0..rows {
            features.extend(read_f64s(&mut r, input_dim)?);
            targets.push(r.f64()?);
        }
        r.finish()?;
        let partition =
            Dataset::new(input_dim, features, targets).map_err(|e| DecodeError::invalid("partition", e.to_string()))?;
        Ok(TrainingTask {
            cycle_id,
            miner_id,
            model: ModelSpec { input_dim, architecture },
            base_params,
            shard,
            steps,
            learning_rate,
            batch_size,
            seed,
            partition,
        })
    }
}

/// A miner's upload. `work_flops` is simulator bookkeeping of the compute
/// the miner actually spent; it is never sent on the wire or trusted.
#[derive(Debug, Clone, PartialEq)]
pub struct Submission {
    pub report: TrainingReport,
    pub work_flops: u64,
}

/// The winner's right to produce the cycle's block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockAssignment {
    pub cycle_id: u64,
    pub height: u64,
    pub prev_hash: Hash256,
    pub certificate: Certificate,
    pub transactions: Vec<Vec<u8>>,
}

impl BlockAssignment {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u64(self.cycle_id).u64(self.height).bytes(self.prev_hash.as_bytes()).bytes(&self.certificate.to_bytes());
        w.u32(self.transactions.len() as u32);
        for tx in &self.transactions {
            w.var_bytes(tx);
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let cycle_id = r.u64()?;
        let height = r.u64()?;
        let prev_hash = Hash256(r.array()?);
        let certificate = Certificate::from_bytes(r.take(CERTIFICATE_LEN)?)?;
        let count = r.u32()? as usize;
        let mut transactions = Vec::with_capacity(count.min(1024));
        for _ in 0..count {
            transactions.push(r.var_bytes()?.to_vec());
        }
        r.finish()?;
        Ok(BlockAssignment { cycle_id, height, prev_hash, certificate, transactions })
    }
}

/// What an honest winner does with its assignment: Merkle-commit the
/// transactions and bind the certificate hash into the header.
pub fn assemble_certified_block(assignment: &BlockAssignment) -> Result<Block, LedgerError> {
    let root = merkle_root(&assignment.transactions)?;
    let header =
        BlockHeader::new_certified(assignment.prev_hash, root, assignment.cycle_id, assignment.certificate.hash());
    Ok(Block {
        header,
        transactions: assignment.transactions.clone(),
        certificate: Some(assignment.certificate.clone()),
    })
}
