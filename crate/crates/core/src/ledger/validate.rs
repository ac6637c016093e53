use serde::Serialize;

use super::{merkle_root, pow_verify, Block, Chain, LedgerError, PowTarget, ProofKind, BLOCK_VERSION};
use crate::certificate::verify_certificate;
use crate::crypto::PublicKey;
use crate::hash::Hash256;

/// Public inputs needed to check a block's proof.
#[derive(Debug, Clone)]
pub struct ValidationContext {
    pub server_pubkey: PublicKey,
    pub target: PowTarget,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockVerdict {
    pub height: u64,
    pub linkage_ok: bool,
    pub merkle_ok: bool,
    pub proof_ok: bool,
    /// First reason the proof check failed, if it did.
    pub proof_detail: Option<String>,
}

impl BlockVerdict {
    pub fn is_ok(&self) -> bool {
        self.linkage_ok && self.merkle_ok && self.proof_ok
    }

    pub fn into_result(self) -> Result<(), LedgerError> {
        let height = self.height;
        if !self.linkage_ok {
            Err(LedgerError::LinkageMismatch { height })
        } else if !self.merkle_ok {
            Err(LedgerError::MerkleMismatch { height })
        } else if !self.proof_ok {
            Err(LedgerError::ProofInvalid { height, reason: self.proof_detail.unwrap_or_default() })
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub entries: Vec<BlockVerdict>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.entries.iter().all(BlockVerdict::is_ok)
    }

    pub fn first_failure(&self) -> Option<&BlockVerdict> {
        self.entries.iter().find(|v| !v.is_ok())
    }
}

fn check_proof(block: &Block, ctx: &ValidationContext) -> Result<(), String> {
    let header = &block.header;
    if header.version != BLOCK_VERSION {
        return Err(format!("unsupported version {}", header.version));
    }
    match header.proof_kind {
        ProofKind::PowNonce => {
            if block.certificate.is_some() || !header.certificate_hash.is_zero() {
                return Err("nonce-search block carries a certificate".into());
            }
            if !pow_verify(header, &ctx.target) {
                return Err("header hash not below target".into());
            }
        }
        ProofKind::TrainingCertificate => {
            let cert = block.certificate.as_ref().ok_or("certificate missing")?;
            if header.nonce != 0 {
                return Err("certificate block with non-zero nonce".into());
            }
            if cert.hash() != header.certificate_hash {
                return Err("certificate hash does not match header".into());
            }
            if cert.timestamp != header.timestamp || cert.cycle_id != header.timestamp {
                return Err("certificate cycle does not match header timestamp".into());
            }
            if !verify_certificate(&ctx.server_pubkey, cert) {
                return Err("server signature invalid".into());
            }
        }
    }
    Ok(())
}

/// Checks one block against the hash it must link to. `height` is the
/// position the block would occupy.
pub fn validate_block(height: u64, expected_prev: &Hash256, block: &Block, ctx: &ValidationContext) -> BlockVerdict {
    let linkage_ok = block.header.prev_hash == *expected_prev;
    let merkle_ok = matches!(merkle_root(&block.transactions), Ok(root) if root == block.header.merkle_root);
    let proof = check_proof(block, ctx);
    BlockVerdict { height, linkage_ok, merkle_ok, proof_ok: proof.is_ok(), proof_detail: proof.err() }
}

/// Validates every block; failures are report entries, never errors.
pub fn validate_chain(chain: &Chain, server_pubkey: &PublicKey, target: &PowTarget) -> ValidationReport {
    let ctx = ValidationContext { server_pubkey: server_pubkey.clone(), target: *target };
    let mut prev = Hash256::ZERO;
    let entries = chain
        .blocks()
        .iter()
        .enumerate()
        .map(|(i, block)| {
            let verdict = validate_block(i as u64, &prev, block, &ctx);
            prev = block.hash();
            verdict
        })
        .collect();
    ValidationReport { entries }
}
