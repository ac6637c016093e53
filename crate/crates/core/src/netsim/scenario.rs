use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use super::{deliver_messages, MessageKind, MessageQueue, MinerAgent, NodeId, SimMessage};
use crate::config::{ConfigError, ScenarioConfig};
use crate::consensus::{
    BlockAssignment, ConsensusError, Coordinator, CycleRecord, CycleState, Miner, MinerId, Registration, RewardLedger,
    Submission, TrainingTask,
};
use crate::crypto::{generate_keypair, PublicKey, Signature};
use crate::hash::{double_sha256_parts, Hash256};
use crate::ledger::{merkle_hash_count, merkle_root, pow_mine, Block, BlockHeader, Chain, LedgerError, PowTarget};
use crate::training::{init_params, make_synthetic_dataset, TrainingError, TrainingReport};

#[derive(Debug, Error)]
pub enum NetsimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("scenario setup: {0}")]
    Setup(#[from] ConsensusError),
    #[error("dataset: {0}")]
    Dataset(#[from] TrainingError),
    #[error("chain heights differ: training {training}, baseline {baseline}")]
    HeightMismatch { training: u64, baseline: u64 },
}

/// Counted compute of a run. `useful_fraction` is
/// `training_flops / (training_flops + hash_ops * per_hash_op_cost)`,
/// and 0 when nothing was counted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UsefulnessMetric {
    pub blocks: u64,
    pub hash_ops: u64,
    pub training_flops: u64,
    pub per_hash_op_cost: f64,
    pub useful_fraction: f64,
}

impl UsefulnessMetric {
    pub fn new(blocks: u64, hash_ops: u64, training_flops: u64, per_hash_op_cost: f64) -> Self {
        let useful = training_flops as f64;
        let total = useful + hash_ops as f64 * per_hash_op_cost;
        let useful_fraction = if total > 0.0 { useful / total } else { 0.0 };
        UsefulnessMetric { blocks, hash_ops, training_flops, per_hash_op_cost, useful_fraction }
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub chain: Chain,
    pub records: Vec<CycleRecord>,
    /// Server signature over each record's JSON line.
    pub record_signatures: Vec<Signature>,
    pub metric: UsefulnessMetric,
    pub ledger: RewardLedger,
    pub server_pubkey: PublicKey,
    /// Contribution receipts handed out, by cycle.
    pub contribution_certificates: Vec<Vec<(MinerId, crate::certificate::Certificate)>>,
    /// Validation context for the produced chain.
    pub target: PowTarget,
}

/// Deterministic sub-seed for a named purpose.
pub fn derive_seed(label: &str, seed: u64, index: u64) -> Hash256 {
    double_sha256_parts(&[label.as_bytes(), &seed.to_be_bytes(), &index.to_be_bytes()])
}

fn seed_u64(label: &str, seed: u64, index: u64) -> u64 {
    u64::from_be_bytes(derive_seed(label, seed, index).0[..8].try_into().expect("8 bytes"))
}

fn agents_for(config: &ScenarioConfig) -> Vec<MinerAgent> {
    config
        .miners
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let key = generate_keypair(&derive_seed("miner-key", config.seed, i as u64).0);
            MinerAgent::new(i as MinerId, key, m.behavior, m.compute_budget)
        })
        .collect()
}

/// Messages and clock for one run. Agents answer the instant a message
/// arrives; the server acts only at phase deadlines.
struct Network<'a> {
    queue: MessageQueue,
    tick: u64,
    agents: BTreeMap<MinerId, &'a MinerAgent>,
    /// Compute each agent reports spending, keyed by (cycle, miner).
    work: BTreeMap<(u64, MinerId), u64>,
    validation: crate::ledger::ValidationContext,
}

impl Network<'_> {
    fn send_to_miner(&mut self, kind: MessageKind, miner: MinerId, payload: Vec<u8>) {
        self.queue.send(kind, NodeId::Server, NodeId::Miner(miner), payload, self.tick);
    }

    /// Advances the clock to `until`, letting agents react, and returns
    /// what reached the server.
    fn run_until(&mut self, until: u64) -> Vec<SimMessage> {
        let mut inbox = Vec::new();
        while self.tick < until {
            self.tick += 1;
            for msg in deliver_messages(&mut self.queue, self.tick) {
                match msg.receiver {
                    NodeId::Server => inbox.push(msg),
                    NodeId::Miner(id) => {
                        if let Some((kind, payload)) = self.react(id, &msg) {
                            self.queue.send(kind, NodeId::Miner(id), NodeId::Server, payload, self.tick);
                        }
                    }
                }
            }
        }
        inbox
    }

    fn react(&mut self, id: MinerId, msg: &SimMessage) -> Option<(MessageKind, Vec<u8>)> {
        let agent = *self.agents.get(&id)?;
        match msg.kind {
            MessageKind::AssignTask => {
                let task = TrainingTask::from_bytes(&msg.payload).ok()?;
                let sub = agent.train(&task)?;
                self.work.insert((task.cycle_id, id), sub.work_flops);
                Some((MessageKind::SubmitUpdate, sub.report.to_bytes()))
            }
            MessageKind::AnnounceWinner if msg.payload.first() == Some(&1) => {
                let assignment = BlockAssignment::from_bytes(&msg.payload[1..]).ok()?;
                let block = agent.assemble_block(&assignment)?;
                Some((MessageKind::ProposeBlock, block.to_bytes()))
            }
            MessageKind::ProposeBlock => {
                let (head, body) = msg.payload.split_at_checked(40)?;
                let height = u64::from_be_bytes(head[..8].try_into().ok()?);
                let prev = Hash256(head[8..40].try_into().ok()?);
                let block = Block::from_bytes(body).ok()?;
                let ok = agent.validate_block(height, &prev, &block, &self.validation)?;
                Some((MessageKind::ValidationResult, vec![u8::from(ok)]))
            }
            _ => None,
        }
    }
}

fn from_miner(msg: &SimMessage, kind: MessageKind) -> Option<MinerId> {
    match msg.sender {
        NodeId::Miner(id) if msg.kind == kind => Some(id),
        _ => None,
    }
}

/// Flips one bit of the certificate's claimed loss and re-binds the header
/// to the altered certificate, so only the signature can catch it.
fn corrupt_certificate(block: &mut Block) {
    if let Some(cert) = block.certificate.as_mut() {
        cert.loss_after = f64::from_bits(cert.loss_after.to_bits() ^ 1);
        block.header.certificate_hash = cert.hash();
    }
}

fn drive_cycle(
    net: &mut Network<'_>,
    coordinator: &Coordinator,
    state: &mut CycleState,
    chain: &Chain,
    round: u64,
    corrupt: bool,
) -> Result<(), ConsensusError> {
    let start = net.tick;
    let cycle_id = state.cycle_id();
    let agent_ids: Vec<MinerId> = net.agents.keys().copied().collect();
    for id in &agent_ids {
        if let Some(reg) = net.agents[id].registration() {
            net.queue.send(MessageKind::Register, NodeId::Miner(*id), NodeId::Server, reg.to_bytes(), start);
        }
    }

    for msg in net.run_until(start + round) {
        let Some(id) = from_miner(&msg, MessageKind::Register) else { continue };
        match Registration::from_bytes(&msg.payload) {
            Ok(reg) if reg.miner_id == id => state.register(reg)?,
            _ => {}
        }
    }
    let registered: Vec<MinerId> = state.registered().map(|r| r.miner_id).collect();

    let tasks = coordinator.distribute(state)?;
    state.begin_training()?;
    for task in &tasks {
        net.send_to_miner(MessageKind::AssignTask, task.miner_id, task.to_bytes());
    }
    for msg in net.run_until(start + 3 * round) {
        let Some(id) = from_miner(&msg, MessageKind::SubmitUpdate) else { continue };
        let Ok(report) = TrainingReport::from_bytes(&msg.payload) else { continue };
        let work_flops = net.work.get(&(cycle_id, id)).copied().unwrap_or(0);
        match state.submit(id, Submission { report, work_flops }) {
            Ok(()) | Err(ConsensusError::DuplicateSubmission(_) | ConsensusError::UnknownMiner(_)) => {}
            Err(e) => return Err(e),
        }
    }

    coordinator.evaluate(state)?;
    let winner = coordinator.draw(state)?;
    let certification = coordinator.certify(state, chain)?;
    for id in &registered {
        net.send_to_miner(MessageKind::PublishScores, *id, Vec::new());
    }
    let mut to_winner = vec![1u8];
    to_winner.extend(certification.assignment.to_bytes());
    net.send_to_miner(MessageKind::AnnounceWinner, winner, to_winner);
    for (id, cert) in &certification.contributions {
        let mut payload = vec![0u8];
        payload.extend(cert.to_bytes());
        net.send_to_miner(MessageKind::AnnounceWinner, *id, payload);
    }

    let proposal = net
        .run_until(start + 5 * round)
        .into_iter()
        .find(|m| from_miner(m, MessageKind::ProposeBlock) == Some(winner))
        .and_then(|m| Block::from_bytes(&m.payload).ok())
        .map(|mut block| {
            if corrupt {
                corrupt_certificate(&mut block);
            }
            block
        });
    state.propose(proposal)?;

    let block = state.block().expect("proposal recorded").clone();
    let mut payload = chain.height().to_be_bytes().to_vec();
    payload.extend(chain.tip_hash().as_bytes());
    payload.extend(block.to_bytes());
    for id in &registered {
        net.send_to_miner(MessageKind::ProposeBlock, *id, payload.clone());
    }
    let mut votes: Vec<(MinerId, bool)> = Vec::new();
    for msg in net.run_until(start + 7 * round) {
        let Some(id) = from_miner(&msg, MessageKind::ValidationResult) else { continue };
        if registered.contains(&id) && !votes.iter().any(|v| v.0 == id) {
            votes.push((id, msg.payload == [1]));
        }
    }
    votes.sort_unstable();
    coordinator.validate(state, chain, &votes)
}

/// Runs the configured number of cycles over the simulated network.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioOutcome, NetsimError> {
    config.validate()?;
    let spec = config.model_spec();
    let task =
        make_synthetic_dataset(config.seed, config.dataset.n_examples, spec.input_dim, config.dataset.noise_std)?;
    let server_key = generate_keypair(&derive_seed("server-key", config.seed, 0).0);
    let server_pubkey = server_key.public_key().clone();
    let mut coordinator = Coordinator::new(
        spec,
        init_params(&spec, seed_u64("init-params", config.seed, 0)),
        task.train,
        task.validation,
        server_key,
        config.cycle_config(),
        config.seed,
    )?;

    let agents = agents_for(config);
    let round = 1 + config.network.latency_max;
    let mut net = Network {
        queue: MessageQueue::new(
            seed_u64("latency", config.seed, 0),
            config.network.latency_min,
            config.network.latency_max,
        ),
        tick: 0,
        agents: agents.iter().map(|a| (a.id, a)).collect(),
        work: BTreeMap::new(),
        validation: coordinator.validation_context(),
    };

    let mut chain = Chain::new();
    let mut records = Vec::with_capacity(config.cycles as usize);
    let mut contribution_certificates = Vec::with_capacity(config.cycles as usize);
    let mut record_signatures = Vec::with_capacity(config.cycles as usize);
    for cycle_id in 0..config.cycles {
        let start = net.tick;
        let mut state = coordinator.open_cycle(cycle_id);
        let corrupt = config.faults.corrupt_certificate_cycles.contains(&cycle_id);
        let outcome = match drive_cycle(&mut net, &coordinator, &mut state, &chain, round, corrupt) {
            Ok(()) => {
                let snapshot = state.clone();
                coordinator.commit(state, &mut chain).unwrap_or_else(|e| coordinator.fail(snapshot, e))
            }
            Err(e) => coordinator.fail(state, e),
        };
        // Every cycle occupies the same window, whatever happened in it.
        net.run_until(start + 7 * round);
        deliver_messages(&mut net.queue, u64::MAX);
        records.push(outcome.record);
        record_signatures.push(outcome.record_signature);
        contribution_certificates.push(outcome.contribution_certificates);
    }

    let hash_ops = records.iter().map(|r| r.hash_ops).sum();
    let training_flops = records.iter().map(|r| r.training_flops).sum();
    let metric = UsefulnessMetric::new(chain.height(), hash_ops, training_flops, config.usefulness.per_hash_op_cost);
    Ok(ScenarioOutcome {
        chain,
        records,
        record_signatures,
        metric,
        ledger: coordinator.ledger().clone(),
        server_pubkey,
        contribution_certificates,
        target: PowTarget::MAX,
    })
}

#[derive(Debug, Clone)]
pub struct BaselineOutcome {
    pub chain: Chain,
    pub metric: UsefulnessMetric,
    pub target: PowTarget,
    /// Attempted heights where the nonce budget ran out.
    pub failed_cycles: Vec<u64>,
}

/// Nonce-search chain of `blocks` blocks, mined by miner 0, with the same
/// coinbase-plus-mempool transaction shape as the training chain.
pub fn run_baseline_pow(config: &ScenarioConfig, blocks: u64) -> BaselineOutcome {
    let target = PowTarget::from_difficulty_bits(config.pow_baseline.difficulty_bits);
    let miner = generate_keypair(&derive_seed("miner-key", config.seed, 0).0);
    let mut chain = Chain::new();
    let mut hash_ops = 0u64;
    let mut failed_cycles = Vec::new();
    let ctx = crate::ledger::ValidationContext { server_pubkey: miner.public_key().clone(), target };
    for cycle_id in 0..blocks {
        let mut transactions = vec![format!(
            "coinbase cycle={cycle_id} to={} amount={}",
            miner.public_key().to_hex(),
            config.cycle.reward
        )
        .into_bytes()];
        for seq in 0..2u64 {
            let memo = derive_seed("baseline-mempool", config.seed, cycle_id * 2 + seq);
            transactions.push(format!("memo cycle={cycle_id} seq={seq} payload={memo}").into_bytes());
        }
        let root = merkle_root(&transactions).expect("non-empty");
        hash_ops += merkle_hash_count(transactions.len());
        let mut header = BlockHeader::new_pow(chain.tip_hash(), root, cycle_id);
        match pow_mine(&header, &target, config.pow_baseline.max_attempts) {
            Ok(solution) => {
                hash_ops += solution.attempts;
                header.nonce = solution.nonce;
                chain
                    .append_block(Block { header, transactions, certificate: None }, &ctx)
                    .expect("mined block validates");
            }
            Err(LedgerError::TargetUnreachable { attempts }) => {
                hash_ops += attempts;
                failed_cycles.push(cycle_id);
            }
            Err(e) => unreachable!("template is a nonce-search header: {e}"),
        }
    }
    let metric = UsefulnessMetric::new(chain.height(), hash_ops, 0, config.usefulness.per_hash_op_cost);
    BaselineOutcome { chain, metric, target, failed_cycles }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub blocks: u64,
    pub training: UsefulnessMetric,
    pub baseline: UsefulnessMetric,
    /// Training minus baseline useful fraction.
    pub difference: f64,
    pub training_more_useful: bool,
}

pub fn compare_usefulness(
    training: &UsefulnessMetric,
    baseline: &UsefulnessMetric,
) -> Result<ComparisonReport, NetsimError> {
    if training.blocks != baseline.blocks {
        return Err(NetsimError::HeightMismatch { training: training.blocks, baseline: baseline.blocks });
    }
    let difference = training.useful_fraction - baseline.useful_fraction;
    Ok(ComparisonReport {
        blocks: training.blocks,
        training: *training,
        baseline: *baseline,
        difference,
        training_more_useful: training.useful_fraction > baseline.useful_fraction,
    })
}
