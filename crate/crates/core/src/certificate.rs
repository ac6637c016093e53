//! Server-signed training certificates: the proof that replaces nonce search.
//!
//! Wire layout (all integers big-endian):
//!
//! | offset | size | field            |
//! |-------:|-----:|------------------|
//! |      0 |   33 | miner public key (compressed) |
//! |     33 |    8 | cycle id         |
//! |     41 |    8 | params trained   |
//! |     49 |    8 | loss before (IEEE-754) |
//! |     57 |    8 | loss after (IEEE-754)  |
//! |     65 |    8 | timestamp (cycle index) |
//! |     73 |   16 | certificate nonce |
//! |     89 |   32 | signature r      |
//! |    121 |   32 | signature s      |
//!
//! The first 89 bytes are the signed region. A block's `certificate_hash`
//! is the double SHA-256 of all 153 bytes.

use thiserror::Error;

use crate::codec::{DecodeError, Reader, Writer};
use crate::crypto::{sign, verify, KeyPair, PublicKey, Signature};
use crate::hash::{double_sha256, Hash256};

pub const SIGNED_REGION_LEN: usize = 33 + 8 + 8 + 8 + 8 + 8 + 16;
pub const CERTIFICATE_LEN: usize = SIGNED_REGION_LEN + Signature::LEN;

/// Prefix mixed into the signed message of contribution certificates so
/// they can never pass as block-signing certificates.
const CONTRIBUTION_DOMAIN: &[u8] = b"trainchain/contribution-certificate/v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertificateError {
    #[error("non-finite contribution metric: {0}")]
    NonFiniteMetric(&'static str),
}

/// What a certificate entitles its holder to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateRole {
    /// The lottery winner's exclusive right to propose the cycle's block.
    BlockSigning,
    /// A signed receipt of a miner's measured contribution; no protocol rights.
    Contribution,
}

/// The metrics a certificate attests to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContributionMeasures {
    pub params_trained: u64,
    pub loss_before: f64,
    pub loss_after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub miner_pubkey: [u8; 33],
    pub cycle_id: u64,
    pub params_trained: u64,
    pub loss_before: f64,
    pub loss_after: f64,
    pub timestamp: u64,
    pub cert_nonce: [u8; 16],
    pub server_signature: Signature,
}

impl Certificate {
    /// The 89-byte region covered by the server signature.
    pub fn signed_region(&self) -> [u8; SIGNED_REGION_LEN] {
        let mut w = Writer::with_capacity(SIGNED_REGION_LEN);
        w.bytes(&self.miner_pubkey)
            .u64(self.cycle_id)
            .u64(self.params_trained)
            .f64(self.loss_before)
            .f64(self.loss_after)
            .u64(self.timestamp)
            .bytes(&self.cert_nonce);
        w.finish().try_into().expect("fixed-width layout")
    }

    /// Canonical encoding: signed region followed by `r || s`.
    pub fn to_bytes(&self) -> [u8; CERTIFICATE_LEN] {
        let mut out = [0u8; CERTIFICATE_LEN];
        out[..SIGNED_REGION_LEN].copy_from_slice(&self.signed_region());
        out[SIGNED_REGION_LEN..].copy_from_slice(&self.server_signature.to_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let cert = Certificate {
            miner_pubkey: r.array()?,
            cycle_id: r.u64()?,
            params_trained: r.u64()?,
            loss_before: r.f64()?,
            loss_after: r.f64()?,
            timestamp: r.u64()?,
            cert_nonce: r.array()?,
            server_signature: Signature::from_bytes(&r.array()?),
        };
        r.finish()?;
        Ok(cert)
    }

    pub fn hash(&self) -> Hash256 {
        double_sha256(&self.to_bytes())
    }

    pub fn measures(&self) -> ContributionMeasures {
        ContributionMeasures {
            params_trained: self.params_trained,
            loss_before: self.loss_before,
            loss_after: self.loss_after,
        }
    }

    pub fn miner_pubkey_hex(&self) -> String {
        hex::encode(self.miner_pubkey)
    }
}

fn signing_message(role: CertificateRole, region: &[u8; SIGNED_REGION_LEN]) -> Vec<u8> {
    match role {
        CertificateRole::BlockSigning => region.to_vec(),
        CertificateRole::Contribution => [CONTRIBUTION_DOMAIN, region.as_slice()].concat(),
    }
}

#[allow(clippy::too_many_arguments)]
fn issue_with_role(
    role: CertificateRole,
    server_key: &KeyPair,
    miner_pubkey: &PublicKey,
    measures: &ContributionMeasures,
    cycle_id: u64,
    timestamp: u64,
    cert_nonce: [u8; 16],
) -> Result<Certificate, CertificateError> {
    if !measures.loss_before.is_finite() {
        return Err(CertificateError::NonFiniteMetric("loss_before"));
    }
    if !measures.loss_after.is_finite() {
        return Err(CertificateError::NonFiniteMetric("loss_after"));
    }
    let mut cert = Certificate {
        miner_pubkey: miner_pubkey.to_compressed(),
        cycle_id,
        params_trained: measures.params_trained,
        loss_before: measures.loss_before,
        loss_after: measures.loss_after,
        timestamp,
        cert_nonce,
        server_signature: Signature { r: [0; 32], s: [0; 32] },
    };
    cert.server_signature = sign(server_key, &signing_message(role, &cert.signed_region()));
    Ok(cert)
}

/// Issues the winner's block-signing certificate.
pub fn issue_certificate(
    server_key: &KeyPair,
    miner_pubkey: &PublicKey,
    measures: &ContributionMeasures,
    cycle_id: u64,
    timestamp: u64,
    cert_nonce: [u8; 16],
) -> Result<Certificate, CertificateError> {
    issue_with_role(CertificateRole::BlockSigning, server_key, miner_pubkey, measures, cycle_id, timestamp, cert_nonce)
}

/// Issues a contribution receipt, which does not verify as a block-signing
/// certificate.
pub fn issue_contribution_certificate(
    server_key: &KeyPair,
    miner_pubkey: &PublicKey,
    measures: &ContributionMeasures,
    cycle_id: u64,
    timestamp: u64,
    cert_nonce: [u8; 16],
) -> Result<Certificate, CertificateError> {
    issue_with_role(CertificateRole::Contribution, server_key, miner_pubkey, measures, cycle_id, timestamp, cert_nonce)
}

/// Checks a block-signing certificate against the server key.
pub fn verify_certificate(server_pubkey: &PublicKey, cert: &Certificate) -> bool {
    verify_certificate_as(CertificateRole::BlockSigning, server_pubkey, cert)
}

pub fn verify_certificate_as(role: CertificateRole, server_pubkey: &PublicKey, cert: &Certificate) -> bool {
    verify(server_pubkey, &signing_message(role, &cert.signed_region()), &cert.server_signature)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::generate_keypair;

    fn measures() -> ContributionMeasures {
        ContributionMeasures { params_trained: 12, loss_before: 1.5, loss_after: 0.75 }
    }

    #[test]
    fn issue_then_verify() {
        let server = generate_keypair(&[1; 32]);
        let miner = generate_keypair(&[2; 32]);
        let cert = issue_certificate(&server, miner.public_key(), &measures(), 3, 3, [9; 16]).unwrap();
        assert!(verify_certificate(server.public_key(), &cert));
        assert!(!verify_certificate(miner.public_key(), &cert));
        assert_eq!(cert.signed_region().len(), 89);
        assert_eq!(cert.to_bytes().len(), 153);
        assert_eq!(Certificate::from_bytes(&cert.to_bytes()).unwrap(), cert);
    }

    #[test]
    fn non_finite_losses_rejected() {
        let server = generate_keypair(&[1; 32]);
        let mut m = measures();
        m.loss_after = f64::NAN;
        assert_eq!(
            issue_certificate(&server, server.public_key(), &m, 0, 0, [0; 16]),
            Err(CertificateError::NonFiniteMetric("loss_after"))
        );
        m.loss_after = 0.0;
        m.loss_before = f64::INFINITY;
        assert_eq!(
            issue_certificate(&server, server.public_key(), &m, 0, 0, [0; 16]),
            Err(CertificateError::NonFiniteMetric("loss_before"))
        );
    }

    #[test]
    fn distinct_nonces_give_distinct_signed_bytes() {
        let server = generate_keypair(&[1; 32]);
        let a = issue_certificate(&server, server.public_key(), &measures(), 5, 5, [1; 16]).unwrap();
        let b = issue_certificate(&server, server.public_key(), &measures(), 5, 5, [2; 16]).unwrap();
        assert_ne!(a.signed_region(), b.signed_region());
        assert!(verify_certificate(server.public_key(), &a));
        assert!(verify_certificate(server.public_key(), &b));
    }

    #[test]
    fn contribution_receipts_are_not_block_certificates() {
        let server = generate_keypair(&[1; 32]);
        let c = issue_contribution_certificate(&server, server.public_key(), &measures(), 1, 1, [0; 16]).unwrap();
        assert!(verify_certificate_as(CertificateRole::Contribution, server.public_key(), &c));
        assert!(!verify_certificate(server.public_key(), &c));
    }

    #[test]
    fn decode_rejects_wrong_length() {
        assert!(Certificate::from_bytes(&[0u8; 152]).is_err());
        assert!(Certificate::from_bytes(&[0u8; 154]).is_err());
    }
}
