use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::MinerId;

/// Balances by miner id. Missing entries read as zero.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewardLedger(BTreeMap<MinerId, u64>);

impl RewardLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn balance(&self, miner: MinerId) -> u64 {
        self.0.get(&miner).copied().unwrap_or(0)
    }

    pub fn total_supply(&self) -> u64 {
        self.0.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (MinerId, u64)> + '_ {
        self.0.iter().map(|(k, v)| (*k, *v))
    }
}

/// Credits the block reward to the winner; nobody else changes.
pub fn distribute_reward(ledger: &mut RewardLedger, winner: MinerId, reward: u64) {
    if reward == 0 {
        return;
    }
    let balance = ledger.0.entry(winner).or_insert(0);
    *balance = balance.checked_add(reward).expect("reward supply overflow");
}
