//! Baseline nonce search.

use std::fmt;

use super::{BlockHeader, LedgerError, ProofKind};
use crate::hash::Hash256;

/// A 256-bit big-endian target; a header meets it when its hash, read as a
/// big-endian integer, is strictly smaller.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PowTarget(pub [u8; 32]);

impl PowTarget {
    /// 2^256 - 1.
    pub const MAX: PowTarget = PowTarget([0xff; 32]);

    /// 2^(256 - bits): hashes need `bits` leading zero bits. `bits = 0`
    /// gives [`PowTarget::MAX`].
    pub fn from_difficulty_bits(bits: u32) -> PowTarget {
        assert!(bits <= 256, "difficulty above 256 bits");
        if bits == 0 {
            return PowTarget::MAX;
        }
        let exponent = 256 - bits as usize;
        let mut out = [0u8; 32];
        out[31 - exponent / 8] = 1 << (exponent % 8);
        PowTarget(out)
    }

    pub fn is_met_by(&self, hash: &Hash256) -> bool {
        hash.0 < self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, hex::FromHexError> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out)?;
        Ok(PowTarget(out))
    }
}

impl fmt::Debug for PowTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PowTarget({})", self.to_hex())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PowSolution {
    pub nonce: u64,
    /// Every header hash evaluated, including the successful one.
    pub attempts: u64,
}

/// Searches nonces 0, 1, 2, ... until the header hash falls below `target`.
pub fn pow_mine(template: &BlockHeader, target: &PowTarget, max_attempts: u64) -> Result<PowSolution, LedgerError> {
    if template.proof_kind != ProofKind::PowNonce {
        return Err(LedgerError::WrongProofKind);
    }
    let mut header = template.clone();
    for attempt in 0..max_attempts {
        header.nonce = attempt;
        if target.is_met_by(&header.hash()) {
            return Ok(PowSolution { nonce: attempt, attempts: attempt + 1 });
        }
    }
    Err(LedgerError::TargetUnreachable { attempts: max_attempts })
}

pub fn pow_verify(header: &BlockHeader, target: &PowTarget) -> bool {
    target.is_met_by(&header.hash())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hash::double_sha256;

    fn template(tag: u64) -> BlockHeader {
        BlockHeader::new_pow(double_sha256(&tag.to_be_bytes()), double_sha256(b"txs"), tag)
    }

    #[test]
    fn difficulty_bits_layout() {
        let t8 = PowTarget::from_difficulty_bits(8);
        // 2^248: any hash below it starts with a zero byte.
        assert_eq!(t8.0[0], 1);
        assert!(t8.0[1..].iter().all(|&b| b == 0));
        let t1 = PowTarget::from_difficulty_bits(1);
        assert_eq!(t1.0[0], 0x80);
        let t256 = PowTarget::from_difficulty_bits(256);
        assert_eq!(t256.0[31], 1);
    }

    #[test]
    fn max_target_accepts_first_nonce() {
        let sol = pow_mine(&template(1), &PowTarget::MAX, 10).unwrap();
        assert_eq!(sol, PowSolution { nonce: 0, attempts: 1 });
    }

    #[test]
    fn target_one_is_unreachable() {
        let mut one = [0u8; 32];
        one[31] = 1;
        assert_eq!(
            pow_mine(&template(2), &PowTarget(one), 1000),
            Err(LedgerError::TargetUnreachable { attempts: 1000 })
        );
    }

    #[test]
    fn certificate_headers_cannot_be_mined() {
        let h = BlockHeader::new_certified(Hash256::ZERO, Hash256::ZERO, 0, Hash256::ZERO);
        assert_eq!(pow_mine(&h, &PowTarget::MAX, 1), Err(LedgerError::WrongProofKind));
    }

    #[test]
    fn mined_header_verifies() {
        let target = PowTarget::from_difficulty_bits(8);
        let mut h = template(3);
        h.nonce = pow_mine(&h, &target, 1 << 20).unwrap().nonce;
        assert!(pow_verify(&h, &target));
        assert!(pow_verify(&h, &PowTarget::MAX));
    }
}
