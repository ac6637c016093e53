//! The coordination server's side of a training cycle, from miner
//! registration through to the reward.

mod cycle;
mod evaluate;
mod messages;
mod record;
mod reward;
mod scoring;

use thiserror::Error;

use crate::certificate::CertificateError;
use crate::codec::DecodeError;
use crate::crypto::PublicKey;
use crate::hash::Hash256;
use crate::ledger::{Block, LedgerError, ValidationContext};
use crate::training::{ShardRange, TrainingError};

pub use cycle::{run_cycle, Certification, Coordinator, CycleOutcome, CyclePhase, CycleState};
pub use evaluate::{evaluate_report, ReportEvaluation};
pub use messages::{assemble_certified_block, BlockAssignment, Registration, Submission, TrainingTask};
pub use record::{
    audit_block, audit_record, sign_record_line, verify_record_line, AuditError, CycleRecord, CycleStatus, MinerRecord,
    RewardDelta,
};
pub use reward::{distribute_reward, RewardLedger};
pub use scoring::{
    lottery_seed, lottery_seed_from_encoded, score_contribution, weighted_lottery, ContributionMetrics,
    ContributionScore, LotteryError, ScoreTable, WEIGHT_SUM_TOLERANCE,
};

pub type MinerId = u32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConsensusError {
    #[error("no miners registered")]
    NoRegisteredMiners,
    #[error("cannot enter {requested:?} from {current:?}")]
    PhaseOrder { current: CyclePhase, requested: CyclePhase },
    #[error("miner {0} registered twice")]
    DuplicateRegistration(MinerId),
    #[error("miner {0} is not part of this cycle")]
    UnknownMiner(MinerId),
    #[error("miner {0} submitted twice")]
    DuplicateSubmission(MinerId),
    #[error("miner {miner_id} submitted shard {actual:?}, assigned {expected:?}")]
    ShardRangeMismatch { miner_id: MinerId, expected: ShardRange, actual: ShardRange },
    #[error("{miners} miners cannot split {examples} training examples")]
    InsufficientData { miners: usize, examples: usize },
    #[error("invalid cycle configuration: {0}")]
    InvalidConfig(String),
    #[error("winner {0} did not propose a block")]
    WinnerUnresponsive(MinerId),
    #[error("proposed block rejected: {0}")]
    BlockRejected(String),
    #[error("malformed message: {0}")]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Training(#[from] TrainingError),
    #[error(transparent)]
    Certificate(#[from] CertificateError),
    #[error(transparent)]
    Lottery(#[from] LotteryError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

/// Per-cycle parameters shared by every cycle of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleConfig {
    /// SGD steps granted to a miner with compute budget 1.
    pub cycle_steps: u64,
    /// Weight of the parameter-volume component; loss gets `1 - alpha`.
    pub alpha: f64,
    pub reward: u64,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl CycleConfig {
    pub fn validate(&self) -> Result<(), ConsensusError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(ConsensusError::InvalidConfig(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(ConsensusError::InvalidConfig("learning_rate must be finite and non-negative".into()));
        }
        if self.batch_size == 0 {
            return Err(ConsensusError::InvalidConfig("batch_size must be positive".into()));
        }
        Ok(())
    }

    /// Steps granted for a declared compute budget.
    pub fn assigned_steps(&self, compute_budget: f64) -> u64 {
        if compute_budget.is_finite() && compute_budget > 0.0 {
            (self.cycle_steps as f64 * compute_budget).floor() as u64
        } else {
            0
        }
    }
}

/// A participant as seen by the coordinator. `None` from any callback
/// means the miner did not answer before the phase deadline.
pub trait Miner {
    fn id(&self) -> MinerId;
    fn registration(&self) -> Option<Registration>;
    fn train(&self, task: &TrainingTask) -> Option<Submission>;
    fn assemble_block(&self, assignment: &BlockAssignment) -> Option<Block>;
    /// Independent check of a proposed block; `None` abstains.
    fn validate_block(&self, height: u64, prev_hash: &Hash256, block: &Block, ctx: &ValidationContext) -> Option<bool>;
    fn public_key(&self) -> &PublicKey;
}
