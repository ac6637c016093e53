//! Discrete-event harness around the coordinator. Miner agents talk to it
//! over a seeded message fabric; a nonce-search baseline gives the
//! usefulness metric something to compare against.

mod agent;
mod fabric;
mod scenario;

pub use agent::MinerAgent;
pub use fabric::{deliver_messages, MessageKind, MessageQueue, NodeId, SimMessage};
pub use scenario::{
    compare_usefulness, derive_seed, run_baseline_pow, run_scenario, BaselineOutcome, ComparisonReport, NetsimError,
    ScenarioOutcome, UsefulnessMetric,
};
