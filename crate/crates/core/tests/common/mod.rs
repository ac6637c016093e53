#![allow(dead_code)]

use trainchain_core::config::{
    ArchitectureKind, Behavior, CycleSection, DatasetConfig, FaultConfig, MinerConfig, ModelConfig, NetworkConfig,
    OutputConfig, PowBaselineConfig, ScenarioConfig, UsefulnessConfig,
};

pub fn scenario(seed: u64, cycles: u64, miners: &[(Behavior, f64)]) -> ScenarioConfig {
    ScenarioConfig {
        seed,
        cycles,
        miners: miners.iter().map(|&(behavior, compute_budget)| MinerConfig { behavior, compute_budget }).collect(),
        model: ModelConfig { architecture: ArchitectureKind::Linear, input_dim: 4, hidden: None },
        dataset: DatasetConfig { n_examples: 120, noise_std: 0.1 },
        cycle: CycleSection { steps: 10, alpha: 0.5, reward: 50, learning_rate: 0.05, batch_size: 16 },
        network: NetworkConfig { latency_min: 0, latency_max: 2 },
        pow_baseline: PowBaselineConfig { enabled: true, difficulty_bits: 8, max_attempts: 1 << 20 },
        usefulness: UsefulnessConfig { per_hash_op_cost: 1.0 },
        output: OutputConfig { dir: "out".into() },
        faults: FaultConfig::default(),
    }
}

pub fn honest(n: usize) -> Vec<(Behavior, f64)> {
    vec![(Behavior::Honest, 1.0); n]
}
