use trainchain_core::config::Behavior;
use trainchain_core::consensus::{
    audit_block, audit_record, lottery_seed, run_cycle, verify_record_line, Coordinator, CycleConfig, CyclePhase,
    CycleStatus, Miner,
};
use trainchain_core::crypto::generate_keypair;
use trainchain_core::hash::double_sha256;
use trainchain_core::ledger::{validate_chain, Chain};
use trainchain_core::netsim::MinerAgent;
use trainchain_core::training::{
    init_params, make_synthetic_dataset, ModelSpec, ParameterShard, ShardRange, TrainingReport,
};

fn coordinator(seed: u64) -> Coordinator {
    let spec = ModelSpec::linear(5);
    let data = make_synthetic_dataset(seed, 150, 5, 0.1).unwrap();
    let config = CycleConfig { cycle_steps: 15, alpha: 0.5, reward: 25, learning_rate: 0.05, batch_size: 16 };
    Coordinator::new(
        spec,
        init_params(&spec, seed),
        data.train,
        data.validation,
        generate_keypair(&[7; 32]),
        config,
        seed,
    )
    .unwrap()
}

fn agents(behaviors: &[Behavior]) -> Vec<MinerAgent> {
    behaviors
        .iter()
        .enumerate()
        .map(|(i, b)| MinerAgent::new(i as u32, generate_keypair(&[i as u8 + 1; 32]), *b, 1.0))
        .collect()
}

fn refs(agents: &[MinerAgent]) -> Vec<&dyn Miner> {
    agents.iter().map(|a| a as &dyn Miner).collect()
}

#[test]
fn single_honest_miner_always_wins() {
    let mut coord = coordinator(1);
    let miners = agents(&[Behavior::Honest]);
    let mut chain = Chain::new();
    for cycle in 0..3 {
        let out = run_cycle(&mut coord, &refs(&miners), cycle, &mut chain);
        assert!(out.error.is_none(), "{:?}", out.error);
        assert_eq!(out.record.winner_id, Some(0));
        assert_eq!(out.record.miners[0].weight, 1.0);
        assert_eq!(out.trace, CyclePhase::ALL.to_vec());
    }
    assert_eq!(chain.height(), 3);
    assert!(validate_chain(&chain, coord.public_key(), &trainchain_core::PowTarget::MAX).is_valid());
}

#[test]
fn mixed_miners_credit_only_measured_work() {
    let mut coord = coordinator(2);
    let miners = agents(&[Behavior::Honest, Behavior::Lazy, Behavior::Falsifier]);
    let mut chain = Chain::new();
    let out = run_cycle(&mut coord, &refs(&miners), 0, &mut chain);
    let r = &out.record;
    assert_eq!(r.status, CycleStatus::Committed);
    let lazy = r.miner(1).unwrap();
    assert_eq!((lazy.params_trained, lazy.param_component, lazy.loss_component), (0, 0.0, 0.0));
    let f = r.miner(2).unwrap();
    let measured = f.measured_loss_after.unwrap();
    assert!(measured > r.loss_before.unwrap(), "random weights should not help");
    assert_eq!(f.loss_delta, 0.0);
    let sum: f64 = r.miners.iter().map(|m| m.weight).sum();
    assert!((sum - 1.0).abs() <= 1e-9);
    audit_record(r).unwrap();
    audit_block(r, out.block.as_ref().unwrap(), coord.public_key()).unwrap();
    assert!(verify_record_line(coord.public_key(), &r.to_json_line(), &out.record_signature));
    assert_eq!(out.contribution_certificates.len(), 3);
}

#[test]
fn same_inputs_same_block_and_record() {
    let run = || {
        let mut coord = coordinator(3);
        let miners = agents(&[Behavior::Honest, Behavior::Honest, Behavior::Falsifier]);
        let mut chain = Chain::new();
        let out = run_cycle(&mut coord, &refs(&miners), 0, &mut chain);
        (out.block.unwrap().hash(), out.record.to_json_line())
    };
    assert_eq!(run(), run());
}

#[test]
fn failed_cycle_changes_nothing() {
    // A lone offline miner registers, earns nothing, wins the uniform
    // fallback draw and never proposes.
    let mut coord = coordinator(4);
    let miners = agents(&[Behavior::Offline]);
    let mut chain = Chain::new();
    let params = coord.params().to_vec();
    let out = run_cycle(&mut coord, &refs(&miners), 0, &mut chain);
    assert_eq!(out.record.status, CycleStatus::Failed);
    assert!(out.record.degenerate);
    assert!(chain.is_empty());
    assert_eq!(coord.params(), params.as_slice());
    assert_eq!(coord.ledger().total_supply(), 0);
    assert_eq!(out.trace.last(), Some(&CyclePhase::BlockProposal));
    audit_record(&out.record).unwrap();
}

#[test]
fn no_miners_is_an_error() {
    let mut coord = coordinator(5);
    let mut chain = Chain::new();
    let out = run_cycle(&mut coord, &[], 0, &mut chain);
    assert_eq!(out.error, Some(trainchain_core::consensus::ConsensusError::NoRegisteredMiners));
    assert!(chain.is_empty());
}

#[test]
fn reward_supply_is_conserved() {
    let mut coord = coordinator(6);
    let miners = agents(&[Behavior::Honest, Behavior::Honest, Behavior::Lazy]);
    let mut chain = Chain::new();
    for cycle in 0..12 {
        run_cycle(&mut coord, &refs(&miners), cycle, &mut chain);
    }
    assert_eq!(chain.height(), 12);
    assert_eq!(coord.ledger().total_supply(), 12 * 25);
}

#[test]
fn seed_reacts_to_every_report_bit() {
    let reports: Vec<TrainingReport> = (0..3)
        .map(|i| TrainingReport {
            miner_id: i,
            shard: ParameterShard {
                range: ShardRange::new(2 * i as usize, 2 * i as usize + 2),
                values: vec![0.25, -1.5],
            },
            params_trained: 2,
            loss_before: 1.0,
            loss_after: 0.5,
            steps_used: 10,
        })
        .collect();
    let seed = lottery_seed(9, &reports);
    assert_eq!(seed, lottery_seed(9, &reports));
    let encoded: Vec<Vec<u8>> = reports.iter().map(TrainingReport::to_bytes).collect();
    let total_bits = encoded.iter().map(|e| e.len() * 8).sum::<usize>();
    for trial in 0..100 {
        let bit = (trial * 7919) % total_bits;
        let mut tampered = encoded.clone();
        let mut offset = bit / 8;
        let which = tampered.iter().position(|e| {
            if offset < e.len() {
                true
            } else {
                offset -= e.len();
                false
            }
        });
        tampered[which.unwrap()][offset] ^= 1 << (bit % 8);
        assert_ne!(trainchain_core::consensus::lottery_seed_from_encoded(9, &tampered), seed, "bit {bit}");
    }
    assert_eq!(lottery_seed(9, &[]), double_sha256(&9u64.to_be_bytes()));
}
