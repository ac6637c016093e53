//! Proof-of-useful-training consensus at desk scale.
//!
//! Miners train contiguous shards of a small regression model, a
//! coordination server measures each contribution on held-out data, draws a
//! seeded weighted lottery, and signs a certificate that lets the winner
//! append a block to a double-SHA-256 linked chain. A nonce-search miner is
//! included as the baseline the usefulness metric compares against.

pub mod certificate;
pub mod codec;
pub mod config;
pub mod consensus;
pub mod crypto;
pub mod dump;
pub mod hash;
pub mod ledger;
pub mod netsim;
pub mod training;

pub use certificate::{verify_certificate, Certificate, ContributionMeasures};
pub use crypto::{KeyPair, PublicKey, Signature};
pub use hash::{double_sha256, Hash256};
pub use ledger::{Block, BlockHeader, Chain, PowTarget, ProofKind};
