//! The coordinator and its per-cycle state machine.
//!
//! A cycle walks the phases of [`CyclePhase::ALL`] in order. Coordinator
//! state and the chain change only once Reward is entered, so a cycle that
//! fails earlier leaves them as they were.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::record::{sign_record_line, CycleRecord, CycleStatus, MinerRecord, RewardDelta};
use super::{
    distribute_reward, evaluate_report, lottery_seed_from_encoded, score_contribution, weighted_lottery,
    BlockAssignment, ConsensusError, ContributionMetrics, CycleConfig, Miner, MinerId, Registration, RewardLedger,
    ScoreTable, Submission, TrainingTask,
};
use crate::certificate::{issue_certificate, issue_contribution_certificate, Certificate, ContributionMeasures};
use crate::crypto::{KeyPair, PublicKey, Signature};
use crate::hash::{double_sha256, double_sha256_parts, Hash256};
use crate::ledger::{merkle_hash_count, validate_block, Block, Chain, PowTarget, ValidationContext};
use crate::training::{
    assemble_model, eval_flops, evaluate_loss, partition_even, partition_model, Dataset, ModelSpec, ParameterShard,
    ShardRange, TrainingReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CyclePhase {
    Registration,
    Distribution,
    Training,
    Evaluation,
    Lottery,
    Certification,
    BlockProposal,
    Validation,
    Reward,
}

impl CyclePhase {
    pub const ALL: [CyclePhase; 9] = [
        CyclePhase::Registration,
        CyclePhase::Distribution,
        CyclePhase::Training,
        CyclePhase::Evaluation,
        CyclePhase::Lottery,
        CyclePhase::Certification,
        CyclePhase::BlockProposal,
        CyclePhase::Validation,
        CyclePhase::Reward,
    ];

    pub fn next(self) -> Option<CyclePhase> {
        Self::ALL.get(self as usize + 1).copied()
    }
}

#[derive(Debug, Clone)]
struct Assignment {
    registration: Registration,
    shard: ShardRange,
    steps: u64,
}

#[derive(Debug, Clone)]
struct Evaluated {
    miner_id: MinerId,
    accepted: bool,
    rejection: Option<String>,
    measured: Option<f64>,
    report: Option<TrainingReport>,
    params_trained: u64,
    steps_credited: u64,
    loss_delta: f64,
}

#[derive(Debug, Clone)]
struct Evaluation {
    loss_before: f64,
    entries: Vec<Evaluated>,
    scores: ScoreTable,
    merged_params: Vec<f64>,
    training_flops: u64,
}

/// Bookkeeping for one cycle in flight.
#[derive(Debug, Clone)]
pub struct CycleState {
    cycle_id: u64,
    phase: CyclePhase,
    trace: Vec<CyclePhase>,
    registered: BTreeMap<MinerId, Registration>,
    assignments: BTreeMap<MinerId, Assignment>,
    submissions: BTreeMap<MinerId, Submission>,
    evaluation: Option<Evaluation>,
    seed: Option<Hash256>,
    winner: Option<MinerId>,
    certificate: Option<Certificate>,
    contributions: BTreeMap<MinerId, Certificate>,
    transactions: Vec<Vec<u8>>,
    block: Option<Block>,
    votes: Vec<(MinerId, bool)>,
}

impl CycleState {
    pub fn cycle_id(&self) -> u64 {
        self.cycle_id
    }

    pub fn phase(&self) -> CyclePhase {
        self.phase
    }

    /// Phases entered so far, in order.
    pub fn trace(&self) -> &[CyclePhase] {
        &self.trace
    }

    pub fn registered(&self) -> impl Iterator<Item = &Registration> {
        self.registered.values()
    }

    pub fn winner(&self) -> Option<MinerId> {
        self.winner
    }

    pub fn block(&self) -> Option<&Block> {
        self.block.as_ref()
    }

    fn enter(&mut self, requested: CyclePhase) -> Result<(), ConsensusError> {
        if self.phase.next() != Some(requested) {
            return Err(ConsensusError::PhaseOrder { current: self.phase, requested });
        }
        self.phase = requested;
        self.trace.push(requested);
        Ok(())
    }

    fn require(&self, phase: CyclePhase) -> Result<(), ConsensusError> {
        if self.phase == phase {
            Ok(())
        } else {
            Err(ConsensusError::PhaseOrder { current: self.phase, requested: phase })
        }
    }

    pub fn register(&mut self, registration: Registration) -> Result<(), ConsensusError> {
        self.require(CyclePhase::Registration)?;
        if self.registered.contains_key(&registration.miner_id) {
            return Err(ConsensusError::DuplicateRegistration(registration.miner_id));
        }
        self.registered.insert(registration.miner_id, registration);
        Ok(())
    }

    pub fn begin_training(&mut self) -> Result<(), ConsensusError> {
        self.enter(CyclePhase::Training)
    }

    /// Accepts an upload during the training window.
    pub fn submit(&mut self, miner_id: MinerId, submission: Submission) -> Result<(), ConsensusError> {
        self.require(CyclePhase::Training)?;
        if !self.assignments.contains_key(&miner_id) {
            return Err(ConsensusError::UnknownMiner(miner_id));
        }
        if self.submissions.contains_key(&miner_id) {
            return Err(ConsensusError::DuplicateSubmission(miner_id));
        }
        self.submissions.insert(miner_id, submission);
        Ok(())
    }

    /// Records the winner's block, or its silence.
    pub fn propose(&mut self, block: Option<Block>) -> Result<(), ConsensusError> {
        self.enter(CyclePhase::BlockProposal)?;
        let winner = self.winner.expect("lottery ran");
        self.block = Some(block.ok_or(ConsensusError::WinnerUnresponsive(winner))?);
        Ok(())
    }
}

/// What certification hands out: the winner's block assignment and a
/// contribution receipt for every registered miner.
#[derive(Debug, Clone, PartialEq)]
pub struct Certification {
    pub winner: MinerId,
    pub assignment: BlockAssignment,
    pub contributions: Vec<(MinerId, Certificate)>,
}

#[derive(Debug, Clone)]
pub struct CycleOutcome {
    pub record: CycleRecord,
    /// The appended block, for committed cycles.
    pub block: Option<Block>,
    pub contribution_certificates: Vec<(MinerId, Certificate)>,
    pub error: Option<ConsensusError>,
    pub trace: Vec<CyclePhase>,
    /// Server signature over `record.to_json_line()`.
    pub record_signature: Signature,
}

/// The coordination server: owns the global model, the held-out set, the
/// signing key and the reward ledger.
#[derive(Debug, Clone)]
pub struct Coordinator {
    model: ModelSpec,
    params: Vec<f64>,
    train: Dataset,
    validation: Dataset,
    key: KeyPair,
    config: CycleConfig,
    ledger: RewardLedger,
    seed: u64,
}

fn derive_bytes(label: &[u8], seed: u64, cycle_id: u64, miner_id: MinerId) -> Hash256 {
    double_sha256_parts(&[label, &seed.to_be_bytes(), &cycle_id.to_be_bytes(), &miner_id.to_be_bytes()])
}

fn params_commitment(params: &[f64]) -> Hash256 {
    let bytes: Vec<u8> = params.iter().flat_map(|v| v.to_bits().to_be_bytes()).collect();
    double_sha256(&bytes)
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl Coordinator {
    pub fn new(
        model: ModelSpec,
        initial_params: Vec<f64>,
        train: Dataset,
        validation: Dataset,
        key: KeyPair,
        config: CycleConfig,
        seed: u64,
    ) -> Result<Self, ConsensusError> {
        config.validate()?;
        if initial_params.len() != model.parameter_count() {
            return Err(ConsensusError::InvalidConfig(format!(
                "{} initial parameters for a model with {}",
                initial_params.len(),
                model.parameter_count()
            )));
        }
        if train.dim() != model.input_dim || validation.dim() != model.input_dim {
            return Err(ConsensusError::InvalidConfig("dataset width differs from model input".into()));
        }
        if validation.is_empty() {
            return Err(ConsensusError::InvalidConfig("empty validation set".into()));
        }
        Ok(Coordinator {
            model,
            params: initial_params,
            train,
            validation,
            key,
            config,
            ledger: RewardLedger::new(),
            seed,
        })
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn config(&self) -> &CycleConfig {
        &self.config
    }

    pub fn ledger(&self) -> &RewardLedger {
        &self.ledger
    }

    pub fn public_key(&self) -> &PublicKey {
        self.key.public_key()
    }

    pub fn validation_set(&self) -> &Dataset {
        &self.validation
    }

    /// Certificate blocks do not consult the nonce target.
    pub fn validation_context(&self) -> ValidationContext {
        ValidationContext { server_pubkey: self.key.public_key().clone(), target: PowTarget::MAX }
    }

    pub fn open_cycle(&self, cycle_id: u64) -> CycleState {
        CycleState {
            cycle_id,
            phase: CyclePhase::Registration,
            trace: vec![CyclePhase::Registration],
            registered: BTreeMap::new(),
            assignments: BTreeMap::new(),
            submissions: BTreeMap::new(),
            evaluation: None,
            seed: None,
            winner: None,
            certificate: None,
            contributions: BTreeMap::new(),
            transactions: Vec::new(),
            block: None,
            votes: Vec::new(),
        }
    }

    /// Closes registration and splits parameters and training rows among
    /// the registered miners in id order.
    pub fn distribute(&self, state: &mut CycleState) -> Result<Vec<TrainingTask>, ConsensusError> {
        state.enter(CyclePhase::Distribution)?;
        let k = state.registered.len();
        if k == 0 {
            return Err(ConsensusError::NoRegisteredMiners);
        }
        let shards = partition_model(&self.model, k)?;
        if k > self.train.len() {
            return Err(ConsensusError::InsufficientData { miners: k, examples: self.train.len() });
        }
        let rows = partition_even(self.train.len(), k);
        let mut tasks = Vec::with_capacity(k);
        for ((reg, shard), rows) in state.registered.values().zip(shards).zip(rows) {
            let steps = self.config.assigned_steps(reg.compute_budget);
            let seed = derive_bytes(b"task-seed", self.seed, state.cycle_id, reg.miner_id);
            tasks.push(TrainingTask {
                cycle_id: state.cycle_id,
                miner_id: reg.miner_id,
                model: self.model,
                base_params: self.params.clone(),
                shard,
                steps,
                learning_rate: self.config.learning_rate,
                batch_size: self.config.batch_size,
                seed: u64::from_be_bytes(seed.0[..8].try_into().expect("8 bytes")),
                partition: self.train.slice(rows.start, rows.end),
            });
            state.assignments.insert(reg.miner_id, Assignment { registration: reg.clone(), shard, steps });
        }
        Ok(tasks)
    }

    /// Closes the training window and measures every submission on the
    /// held-out set. Miners that never uploaded count as empty.
    pub fn evaluate(&self, state: &mut CycleState) -> Result<(), ConsensusError> {
        state.enter(CyclePhase::Evaluation)?;
        let loss_before = evaluate_loss(&self.model, &self.params, &self.validation)?;
        let mut entries = Vec::with_capacity(state.assignments.len());
        for (&miner_id, assignment) in &state.assignments {
            let mut entry = Evaluated {
                miner_id,
                accepted: false,
                rejection: None,
                measured: None,
                report: None,
                params_trained: 0,
                steps_credited: 0,
                loss_delta: 0.0,
            };
            if let Some(sub) = state.submissions.get(&miner_id) {
                let report = &sub.report;
                entry.report = Some(report.clone());
                if report.miner_id != miner_id {
                    entry.rejection = Some(format!("report names miner {}", report.miner_id));
                } else {
                    match evaluate_report(&self.model, report, assignment.shard, &self.params, &self.validation) {
                        Ok(eval) => {
                            entry.accepted = eval.accepted;
                            entry.measured = eval.measured_loss_after;
                        }
                        Err(e @ ConsensusError::ShardRangeMismatch { .. }) => entry.rejection = Some(e.to_string()),
                        Err(e) => return Err(e),
                    }
                }
                if entry.accepted {
                    let measured = entry.measured.expect("accepted implies finite");
                    entry.params_trained = assignment.shard.len() as u64;
                    entry.steps_credited = report.steps_used.min(assignment.steps);
                    entry.loss_delta = (loss_before - measured).max(0.0);
                }
            }
            entries.push(entry);
        }

        let metrics: Vec<ContributionMetrics> = entries
            .iter()
            .map(|e| ContributionMetrics {
                miner_id: e.miner_id,
                param_volume: (e.params_trained * e.steps_credited) as f64,
                loss_delta: e.loss_delta,
            })
            .collect();
        let scores = score_contribution(&metrics, self.config.alpha);

        // Only shards that measurably helped are carried into the next base.
        let improving: Vec<ParameterShard> = entries
            .iter()
            .filter(|e| e.accepted && e.loss_delta > 0.0)
            .map(|e| e.report.as_ref().expect("accepted implies report").shard.clone())
            .collect();
        let merged_params = assemble_model(&self.params, &improving)?;

        let accepted = entries.iter().filter(|e| e.accepted).count() as u64;
        let per_eval = eval_flops(&self.model, self.validation.len());
        let agent_work: u64 =
            entries.iter().filter(|e| e.accepted).map(|e| state.submissions[&e.miner_id].work_flops).sum();
        let training_flops = if accepted == 0 { 0 } else { agent_work + accepted * per_eval + per_eval };

        state.evaluation = Some(Evaluation { loss_before, entries, scores, merged_params, training_flops });
        Ok(())
    }

    /// Seeds the draw from the accepted reports and picks the winner.
    pub fn draw(&self, state: &mut CycleState) -> Result<MinerId, ConsensusError> {
        state.enter(CyclePhase::Lottery)?;
        let eval = state.evaluation.as_ref().expect("evaluation ran");
        let published: Vec<Vec<u8>> = eval
            .entries
            .iter()
            .filter(|e| e.accepted)
            .map(|e| e.report.as_ref().expect("accepted implies report").to_bytes())
            .collect();
        let seed = lottery_seed_from_encoded(state.cycle_id, &published);
        let index = weighted_lottery(&eval.scores.weights(), &seed)?;
        let winner = eval.entries[index].miner_id;
        state.seed = Some(seed);
        state.winner = Some(winner);
        Ok(winner)
    }

    fn measures_for(eval: &Evaluation, miner_id: MinerId) -> ContributionMeasures {
        let e = eval.entries.iter().find(|e| e.miner_id == miner_id).expect("registered miner");
        let loss_after = match (e.accepted, e.measured) {
            (true, Some(m)) => m,
            _ => eval.loss_before,
        };
        ContributionMeasures { params_trained: e.params_trained, loss_before: eval.loss_before, loss_after }
    }

    /// Signs the winner's block certificate and everybody's contribution
    /// receipt, and prepares the block's transaction list.
    pub fn certify(&self, state: &mut CycleState, chain: &Chain) -> Result<Certification, ConsensusError> {
        state.enter(CyclePhase::Certification)?;
        let cycle_id = state.cycle_id;
        let winner = state.winner.expect("lottery ran");
        let eval = state.evaluation.as_ref().expect("evaluation ran");
        let nonce = |label: &[u8], miner: MinerId| -> [u8; 16] {
            derive_bytes(label, self.seed, cycle_id, miner).0[..16].try_into().expect("16 bytes")
        };

        let winner_key = &state.assignments[&winner].registration.public_key;
        let certificate = issue_certificate(
            &self.key,
            winner_key,
            &Self::measures_for(eval, winner),
            cycle_id,
            cycle_id,
            nonce(b"block-cert", winner),
        )?;
        let mut contributions = Vec::with_capacity(state.assignments.len());
        for (&id, a) in &state.assignments {
            let cert = issue_contribution_certificate(
                &self.key,
                &a.registration.public_key,
                &Self::measures_for(eval, id),
                cycle_id,
                cycle_id,
                nonce(b"contribution-cert", id),
            )?;
            contributions.push((id, cert));
        }

        let commitment = params_commitment(&eval.merged_params);
        let mut transactions = vec![
            format!("coinbase cycle={cycle_id} to={} amount={}", winner_key.to_hex(), self.config.reward).into_bytes(),
            format!("model-commit cycle={cycle_id} params={commitment}").into_bytes(),
        ];
        for seq in 0..2u32 {
            let memo = derive_bytes(b"mempool", self.seed, cycle_id, seq);
            transactions.push(format!("memo cycle={cycle_id} seq={seq} payload={memo}").into_bytes());
        }

        state.certificate = Some(certificate.clone());
        state.contributions = contributions.iter().cloned().collect();
        state.transactions = transactions.clone();
        Ok(Certification {
            winner,
            assignment: BlockAssignment {
                cycle_id,
                height: chain.height(),
                prev_hash: chain.tip_hash(),
                certificate,
                transactions,
            },
            contributions,
        })
    }

    /// The server's own check of the proposal plus the network's votes.
    /// Abstentions are ignored; a single rejection fails the cycle.
    pub fn validate(
        &self,
        state: &mut CycleState,
        chain: &Chain,
        votes: &[(MinerId, bool)],
    ) -> Result<(), ConsensusError> {
        state.enter(CyclePhase::Validation)?;
        state.votes = votes.to_vec();
        let block = state.block.as_ref().expect("proposal recorded");
        if block.certificate.as_ref() != state.certificate.as_ref() {
            return Err(ConsensusError::BlockRejected("block does not carry the issued certificate".into()));
        }
        if block.transactions != state.transactions {
            return Err(ConsensusError::BlockRejected("block transactions differ from the assignment".into()));
        }
        validate_block(chain.height(), &chain.tip_hash(), block, &self.validation_context()).into_result()?;
        let rejected: Vec<MinerId> = votes.iter().filter(|(_, ok)| !ok).map(|(id, _)| *id).collect();
        if !rejected.is_empty() {
            return Err(ConsensusError::BlockRejected(format!("rejected by miners {rejected:?}")));
        }
        Ok(())
    }

    /// Appends the block and pays the winner. Accepted shards become the next base.
    pub fn commit(&mut self, mut state: CycleState, chain: &mut Chain) -> Result<CycleOutcome, ConsensusError> {
        state.enter(CyclePhase::Reward)?;
        let block = state.block.clone().expect("validated block");
        chain.append_block(block.clone(), &self.validation_context())?;
        let winner = state.winner.expect("lottery ran");
        distribute_reward(&mut self.ledger, winner, self.config.reward);
        let eval = state.evaluation.as_ref().expect("evaluation ran");
        self.params = eval.merged_params.clone();
        let record = self.build_record(&state, None);
        Ok(CycleOutcome {
            record_signature: sign_record_line(&self.key, &record.to_json_line()),
            record,
            block: Some(block),
            contribution_certificates: state.contributions.into_iter().collect(),
            error: None,
            trace: state.trace,
        })
    }

    /// Abandons the cycle; nothing outside `state` has changed.
    pub fn fail(&self, state: CycleState, error: ConsensusError) -> CycleOutcome {
        let record = self.build_record(&state, Some(&error));
        CycleOutcome {
            record_signature: sign_record_line(&self.key, &record.to_json_line()),
            record,
            block: None,
            contribution_certificates: state.contributions.into_iter().collect(),
            error: Some(error),
            trace: state.trace,
        }
    }

    fn build_record(&self, state: &CycleState, error: Option<&ConsensusError>) -> CycleRecord {
        let eval = state.evaluation.as_ref();
        let committed = error.is_none();
        let miners = state
            .assignments
            .iter()
            .map(|(&id, a)| {
                let entry = eval.and_then(|ev| ev.entries.iter().position(|e| e.miner_id == id).map(|i| (ev, i)));
                let sub = state.submissions.get(&id);
                let mut m = MinerRecord {
                    miner_id: id,
                    pubkey: a.registration.public_key.to_hex(),
                    compute_budget: a.registration.compute_budget,
                    shard_start: a.shard.start,
                    shard_end: a.shard.end,
                    steps_assigned: a.steps,
                    submitted: sub.is_some(),
                    accepted: false,
                    rejection: None,
                    claimed_loss_before: sub.and_then(|s| finite(s.report.loss_before)),
                    claimed_loss_after: sub.and_then(|s| finite(s.report.loss_after)),
                    claimed_steps: sub.map(|s| s.report.steps_used),
                    measured_loss_after: None,
                    params_trained: 0,
                    steps_credited: 0,
                    param_volume: 0,
                    loss_delta: 0.0,
                    param_component: 0.0,
                    loss_component: 0.0,
                    weight: 0.0,
                    contribution_certificate: state.contributions.get(&id).map(Certificate::hash),
                };
                if let Some((ev, i)) = entry {
                    let e = &ev.entries[i];
                    let s = &ev.scores.scores[i];
                    m.accepted = e.accepted;
                    m.rejection = e.rejection.clone();
                    m.measured_loss_after = e.measured;
                    m.params_trained = e.params_trained;
                    m.steps_credited = e.steps_credited;
                    m.param_volume = e.params_trained * e.steps_credited;
                    m.loss_delta = e.loss_delta;
                    m.param_component = s.param_component;
                    m.loss_component = s.loss_component;
                    m.weight = s.weight;
                }
                m
            })
            .collect();
        let published_reports = eval
            .map(|ev| {
                ev.entries
                    .iter()
                    .filter(|e| e.accepted)
                    .map(|e| hex::encode(e.report.as_ref().expect("accepted implies report").to_bytes()))
                    .collect()
            })
            .unwrap_or_default();
        let hash_ops = if committed { merkle_hash_count(state.transactions.len()) + 2 } else { 0 };
        CycleRecord {
            cycle_id: state.cycle_id,
            status: if committed { CycleStatus::Committed } else { CycleStatus::Failed },
            failure: error.map(ToString::to_string),
            alpha: self.config.alpha,
            loss_before: eval.map(|e| e.loss_before),
            degenerate: eval.is_some_and(|e| e.scores.degenerate),
            miners,
            published_reports,
            lottery_seed: state.seed,
            winner_id: state.winner,
            certificate_hash: state.certificate.as_ref().map(Certificate::hash),
            block_hash: if committed { state.block.as_ref().map(Block::hash) } else { None },
            model_commitment: if committed { eval.map(|e| params_commitment(&e.merged_params)) } else { None },
            reward: committed
                .then(|| RewardDelta { miner_id: state.winner.expect("winner"), amount: self.config.reward }),
            accepted_by: state.votes.iter().filter(|v| v.1).map(|v| v.0).collect(),
            rejected_by: state.votes.iter().filter(|v| !v.1).map(|v| v.0).collect(),
            hash_ops,
            training_flops: if committed { eval.map_or(0, |e| e.training_flops) } else { 0 },
        }
    }
}

fn drive(
    coordinator: &Coordinator,
    state: &mut CycleState,
    miners: &BTreeMap<MinerId, &dyn Miner>,
    chain: &Chain,
) -> Result<(), ConsensusError> {
    for miner in miners.values() {
        if let Some(reg) = miner.registration() {
            state.register(reg)?;
        }
    }
    let tasks = coordinator.distribute(state)?;
    state.begin_training()?;
    for task in &tasks {
        if let Some(sub) = miners.get(&task.miner_id).and_then(|m| m.train(task)) {
            state.submit(task.miner_id, sub)?;
        }
    }
    coordinator.evaluate(state)?;
    let winner = coordinator.draw(state)?;
    let certification = coordinator.certify(state, chain)?;
    let proposal = miners.get(&winner).and_then(|m| m.assemble_block(&certification.assignment));
    state.propose(proposal)?;
    let block = state.block.clone().expect("proposal recorded");
    let ctx = coordinator.validation_context();
    let votes: Vec<(MinerId, bool)> = miners
        .iter()
        .filter_map(|(&id, m)| m.validate_block(chain.height(), &chain.tip_hash(), &block, &ctx).map(|v| (id, v)))
        .collect();
    coordinator.validate(state, chain, &votes)
}

/// Runs one full cycle synchronously. Failures are reported in the
/// outcome and leave the coordinator and chain untouched.
pub fn run_cycle(
    coordinator: &mut Coordinator,
    miners: &[&dyn Miner],
    cycle_id: u64,
    chain: &mut Chain,
) -> CycleOutcome {
    let by_id: BTreeMap<MinerId, &dyn Miner> = miners.iter().map(|m| (m.id(), *m)).collect();
    let mut state = coordinator.open_cycle(cycle_id);
    match drive(coordinator, &mut state, &by_id, chain) {
        Ok(()) => {
            let snapshot = state.clone();
            coordinator.commit(state, chain).unwrap_or_else(|e| coordinator.fail(snapshot, e))
        }
        Err(e) => coordinator.fail(state, e),
    }
}
