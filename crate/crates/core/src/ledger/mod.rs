//! Blocks and the hash-linked chain.
//!
//! A header serializes to exactly [`HEADER_LEN`] bytes, big-endian, in this
//! order: version (4), prev_hash (32), merkle_root (32), timestamp (8),
//! proof_kind (1), nonce (8), certificate_hash (32). The block hash is the
//! double SHA-256 of those bytes.

mod merkle;
mod pow;
mod validate;

use thiserror::Error;

use crate::certificate::{Certificate, CERTIFICATE_LEN};
use crate::codec::{DecodeError, Reader, Writer};
use crate::hash::{double_sha256, Hash256};

pub use merkle::{merkle_hash_count, merkle_root};
pub use pow::{pow_mine, pow_verify, PowSolution, PowTarget};
pub use validate::{validate_block, validate_chain, BlockVerdict, ValidationContext, ValidationReport};

pub const HEADER_LEN: usize = 4 + 32 + 32 + 8 + 1 + 8 + 32;
pub const BLOCK_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("transaction set is empty")]
    EmptyTransactionSet,
    #[error("block {height}: prev_hash does not match the chain tip")]
    LinkageMismatch { height: u64 },
    #[error("block {height}: merkle root does not match transactions")]
    MerkleMismatch { height: u64 },
    #[error("block {height}: invalid proof: {reason}")]
    ProofInvalid { height: u64, reason: String },
    #[error("no nonce below target within {attempts} attempts")]
    TargetUnreachable { attempts: u64 },
    #[error("header template must use nonce-search proof")]
    WrongProofKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum ProofKind {
    PowNonce = 0,
    TrainingCertificate = 1,
}

impl ProofKind {
    fn from_byte(b: u8) -> Result<Self, DecodeError> {
        match b {
            0 => Ok(ProofKind::PowNonce),
            1 => Ok(ProofKind::TrainingCertificate),
            other => Err(DecodeError::invalid("proof_kind", format!("unknown tag {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BlockHeader {
    pub version: u32,
    pub prev_hash: Hash256,
    pub merkle_root: Hash256,
    /// Logical cycle index.
    pub timestamp: u64,
    pub proof_kind: ProofKind,
    /// Nonce-search variable; 0 for certificate blocks.
    pub nonce: u64,
    /// Hash of the embedded certificate; all-zero for PoW blocks.
    pub certificate_hash: Hash256,
}

impl BlockHeader {
    pub fn new_pow(prev_hash: Hash256, merkle_root: Hash256, timestamp: u64) -> Self {
        BlockHeader {
            version: BLOCK_VERSION,
            prev_hash,
            merkle_root,
            timestamp,
            proof_kind: ProofKind::PowNonce,
            nonce: 0,
            certificate_hash: Hash256::ZERO,
        }
    }

    pub fn new_certified(prev_hash: Hash256, merkle_root: Hash256, timestamp: u64, certificate_hash: Hash256) -> Self {
        BlockHeader {
            version: BLOCK_VERSION,
            prev_hash,
            merkle_root,
            timestamp,
            proof_kind: ProofKind::TrainingCertificate,
            nonce: 0,
            certificate_hash,
        }
    }

    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut w = Writer::with_capacity(HEADER_LEN);
        w.u32(self.version)
            .bytes(self.prev_hash.as_bytes())
            .bytes(self.merkle_root.as_bytes())
            .u64(self.timestamp)
            .u8(self.proof_kind as u8)
            .u64(self.nonce)
            .bytes(self.certificate_hash.as_bytes());
        w.finish().try_into().expect("fixed-width layout")
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let header = Self::read(&mut r)?;
        r.finish()?;
        Ok(header)
    }

    fn read(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(BlockHeader {
            version: r.u32()?,
            prev_hash: Hash256(r.array()?),
            merkle_root: Hash256(r.array()?),
            timestamp: r.u64()?,
            proof_kind: ProofKind::from_byte(r.u8()?)?,
            nonce: r.u64()?,
            certificate_hash: Hash256(r.array()?),
        })
    }

    pub fn hash(&self) -> Hash256 {
        double_sha256(&self.to_bytes())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub header: BlockHeader,
    pub transactions: Vec<Vec<u8>>,
    /// Present iff the header's proof kind is `TrainingCertificate`.
    pub certificate: Option<Certificate>,
}

impl Block {
    pub fn hash(&self) -> Hash256 {
        self.header.hash()
    }

    /// Header, length-prefixed transactions, then an optional certificate.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(&self.header.to_bytes()).u32(self.transactions.len() as u32);
        for tx in &self.transactions {
            w.var_bytes(tx);
        }
        match &self.certificate {
            Some(cert) => w.u8(1).bytes(&cert.to_bytes()),
            None => w.u8(0),
        };
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let header = BlockHeader::read(&mut r)?;
        let count = r.u32()? as usize;
        let mut transactions = Vec::with_capacity(count.min(1024));
        for _ in 0..count {
            transactions.push(r.var_bytes()?.to_vec());
        }
        let certificate = match r.u8()? {
            0 => None,
            1 => Some(Certificate::from_bytes(r.take(CERTIFICATE_LEN)?)?),
            other => return Err(DecodeError::invalid("certificate flag", format!("{other}"))),
        };
        r.finish()?;
        Ok(Block { header, transactions, certificate })
    }
}

/// An ordered list of blocks. The first block links to the all-zero hash.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Chain {
    blocks: Vec<Block>,
}

impl Chain {
    pub fn new() -> Self {
        Self::default()
    }

    /// Wraps blocks without validating them; use [`validate_chain`] to check.
    pub fn from_blocks(blocks: Vec<Block>) -> Self {
        Chain { blocks }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn height(&self) -> u64 {
        self.blocks.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Hash the next block must link to.
    pub fn tip_hash(&self) -> Hash256 {
        self.blocks.last().map(Block::hash).unwrap_or(Hash256::ZERO)
    }

    /// Validates `block` against the tip and appends it.
    pub fn append_block(&mut self, block: Block, ctx: &ValidationContext) -> Result<(), LedgerError> {
        let verdict = validate_block(self.height(), &self.tip_hash(), &block, ctx);
        verdict.into_result()?;
        self.blocks.push(block);
        Ok(())
    }

    pub fn into_blocks(self) -> Vec<Block> {
        self.blocks
    }
}
