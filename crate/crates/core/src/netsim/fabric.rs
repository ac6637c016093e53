use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::consensus::MinerId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum NodeId {
    Server,
    Miner(MinerId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum MessageKind {
    Register,
    AssignTask,
    SubmitUpdate,
    PublishScores,
    AnnounceWinner,
    ProposeBlock,
    ValidationResult,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimMessage {
    pub kind: MessageKind,
    pub sender: NodeId,
    pub receiver: NodeId,
    pub payload: Vec<u8>,
    pub sent_at: u64,
    pub deliver_at: u64,
    /// Global send order; breaks ties between same-tick messages.
    pub seq: u64,
}

/// In-flight messages. Every message takes one tick plus a latency drawn
/// uniformly from `[latency_min, latency_max]` with a seeded stream, so
/// the delivery schedule is a pure function of the seed and send order.
#[derive(Debug, Clone)]
pub struct MessageQueue {
    pending: Vec<SimMessage>,
    rng: ChaCha8Rng,
    latency_min: u64,
    latency_max: u64,
    next_seq: u64,
}

impl MessageQueue {
    pub fn new(latency_seed: u64, latency_min: u64, latency_max: u64) -> Self {
        assert!(latency_min <= latency_max, "empty latency range");
        MessageQueue {
            pending: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(latency_seed),
            latency_min,
            latency_max,
            next_seq: 0,
        }
    }

    /// Longest time a message can spend in flight.
    pub fn max_transit(&self) -> u64 {
        1 + self.latency_max
    }

    pub fn send(&mut self, kind: MessageKind, sender: NodeId, receiver: NodeId, payload: Vec<u8>, now: u64) -> u64 {
        let latency = self.rng.random_range(self.latency_min..=self.latency_max);
        let deliver_at = now + 1 + latency;
        self.pending.push(SimMessage { kind, sender, receiver, payload, sent_at: now, deliver_at, seq: self.next_seq });
        self.next_seq += 1;
        deliver_at
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }
}

/// Removes and returns every message due by `current_tick`, ordered by
/// `(deliver_at, sender, seq)`.
pub fn deliver_messages(queue: &mut MessageQueue, current_tick: u64) -> Vec<SimMessage> {
    let (mut due, rest): (Vec<_>, Vec<_>) =
        std::mem::take(&mut queue.pending).into_iter().partition(|m| m.deliver_at <= current_tick);
    queue.pending = rest;
    due.sort_by_key(|m| (m.deliver_at, m.sender, m.seq));
    due
}
