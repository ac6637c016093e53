//! Deterministic ECDSA over secp256k1 with SHA-256 message hashing.
//!
//! Nonces follow the RFC 6979 HMAC-DRBG construction and every emitted
//! signature is normalized to the low half of the scalar range, so
//! `sign` is a pure function of `(key, message)`.

use std::fmt;

use hmac::{Hmac, KeyInit, Mac};
use num_bigint::BigUint;
use num_traits::Zero;
use sha2::Sha256;
use thiserror::Error;

use super::secp256k1::{mul_base, mul_base_add, to_be32, AffinePoint, CURVE};
use crate::hash::sha256;

type HmacSha256 = Hmac<Sha256>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KeyError {
    #[error("secret scalar must lie in [1, n-1]")]
    ScalarOutOfRange,
    #[error("bytes do not encode a point on secp256k1")]
    InvalidPoint,
    #[error("malformed public key hex: {0}")]
    Hex(String),
}

/// A public key: an affine point that is expected, but not guaranteed, to
/// lie on the curve. Keys built from untrusted bytes go through
/// [`PublicKey::from_compressed`], which checks membership; [`verify`]
/// re-checks so that off-curve keys are rejected rather than panicking.
#[derive(Clone, PartialEq, Eq)]
pub struct PublicKey(AffinePoint);

impl PublicKey {
    pub const COMPRESSED_LEN: usize = 33;

    pub fn from_compressed(bytes: &[u8; 33]) -> Result<Self, KeyError> {
        AffinePoint::from_compressed(bytes).map(PublicKey).ok_or(KeyError::InvalidPoint)
    }

    pub fn from_hex(s: &str) -> Result<Self, KeyError> {
        let mut bytes = [0u8; 33];
        hex::decode_to_slice(s.trim(), &mut bytes).map_err(|e| KeyError::Hex(e.to_string()))?;
        Self::from_compressed(&bytes)
    }

    /// Builds a key from raw big-endian coordinates without any validation.
    pub fn from_coordinates_unchecked(x: &[u8; 32], y: &[u8; 32]) -> Self {
        PublicKey(AffinePoint { x: BigUint::from_bytes_be(x), y: BigUint::from_bytes_be(y) })
    }

    pub fn is_on_curve(&self) -> bool {
        self.0.is_on_curve()
    }

    pub fn to_compressed(&self) -> [u8; 33] {
        self.0.to_compressed()
    }

    /// 66 lowercase hex characters.
    pub fn to_hex(&self) -> String {
        hex::encode(self.to_compressed())
    }

    pub fn x_bytes(&self) -> [u8; 32] {
        to_be32(&self.0.x)
    }

    pub fn y_bytes(&self) -> [u8; 32] {
        to_be32(&self.0.y)
    }
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey({})", self.to_hex())
    }
}

impl fmt::Display for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

#[derive(Clone)]
pub struct KeyPair {
    secret: BigUint,
    public: PublicKey,
}

impl KeyPair {
    pub fn from_secret_bytes(bytes: &[u8; 32]) -> Result<Self, KeyError> {
        let secret = BigUint::from_bytes_be(bytes);
        if secret.is_zero() || secret >= CURVE.n {
            return Err(KeyError::ScalarOutOfRange);
        }
        let public = mul_base(&secret).to_affine().expect("non-zero scalar below n");
        Ok(KeyPair { secret, public: PublicKey(public) })
    }

    pub fn public_key(&self) -> &PublicKey {
        &self.public
    }

    pub fn secret_bytes(&self) -> [u8; 32] {
        to_be32(&self.secret)
    }
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair").field("public", &self.public).finish_non_exhaustive()
    }
}

/// Derives a key pair from a 32-byte seed.
///
/// The scalar is `SHA-256(seed || counter)` for the first counter value that
/// lands in `[1, n-1]`.
pub fn generate_keypair(seed: &[u8; 32]) -> KeyPair {
    for counter in 0u32.. {
        let mut input = [0u8; 36];
        input[..32].copy_from_slice(seed);
        input[32..].copy_from_slice(&counter.to_be_bytes());
        if let Ok(kp) = KeyPair::from_secret_bytes(&sha256(&input)) {
            return kp;
        }
    }
    unreachable!("counter space exhausted")
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Signature {
    pub r: [u8; 32],
    pub s: [u8; 32],
}

impl Signature {
    pub const LEN: usize = 64;

    pub fn to_bytes(&self) -> [u8; 64] {
        let mut out = [0u8; 64];
        out[..32].copy_from_slice(&self.r);
        out[32..].copy_from_slice(&self.s);
        out
    }

    pub fn from_bytes(bytes: &[u8; 64]) -> Self {
        let mut r = [0u8; 32];
        let mut s = [0u8; 32];
        r.copy_from_slice(&bytes[..32]);
        s.copy_from_slice(&bytes[32..]);
        Signature { r, s }
    }

    pub fn is_low_s(&self) -> bool {
        BigUint::from_bytes_be(&self.s) <= CURVE.half_n
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature(r={}, s={})", hex::encode(self.r), hex::encode(self.s))
    }
}

/// RFC 6979 nonce stream for qlen = hlen = 256.
struct NonceGenerator {
    k: [u8; 32],
    v: [u8; 32],
}

impl NonceGenerator {
    fn new(secret: &[u8; 32], digest: &[u8; 32]) -> Self {
        let h = BigUint::from_bytes_be(digest) % &CURVE.n;
        let h_octets = to_be32(&h);
        let mut gen = NonceGenerator { k: [0u8; 32], v: [1u8; 32] };
        for sep in [0x00u8, 0x01] {
            gen.k = gen.hmac(&[&gen.v, &[sep], secret, &h_octets]);
            gen.v = gen.hmac(&[&gen.v]);
        }
        gen
    }

    fn hmac(&self, parts: &[&[u8]]) -> [u8; 32] {
        let mut mac = HmacSha256::new_from_slice(&self.k).expect("any key length");
        for p in parts {
            mac.update(p);
        }
        mac.finalize().into_bytes().into()
    }

    fn next_candidate(&mut self) -> BigUint {
        loop {
            self.v = self.hmac(&[&self.v]);
            let k = BigUint::from_bytes_be(&self.v);
            if !k.is_zero() && k < CURVE.n {
                return k;
            }
            self.k = self.hmac(&[&self.v, &[0x00]]);
            self.v = self.hmac(&[&self.v]);
        }
    }

    fn reject(&mut self) {
        self.k = self.hmac(&[&self.v, &[0x00]]);
        self.v = self.hmac(&[&self.v]);
    }
}

fn scalar_inv(a: &BigUint) -> BigUint {
    a.modpow(&(&CURVE.n - 2u32), &CURVE.n)
}

/// Signs `SHA-256(message)`.
pub fn sign(key: &KeyPair, message: &[u8]) -> Signature {
    sign_digest(key, &sha256(message))
}

pub fn sign_digest(key: &KeyPair, digest: &[u8; 32]) -> Signature {
    let n = &CURVE.n;
    let secret = to_be32(&key.secret);
    let z = BigUint::from_bytes_be(digest);
    let mut nonces = NonceGenerator::new(&secret, digest);
    loop {
        let k = nonces.next_candidate();
        let point = mul_base(&k).to_affine().expect("k in [1, n-1]");
        let r = &point.x % n;
        if r.is_zero() {
            nonces.reject();
            continue;
        }
        let mut s = (scalar_inv(&k) * ((&z + &r * &key.secret) % n)) % n;
        if s.is_zero() {
            nonces.reject();
            continue;
        }
        if s > CURVE.half_n {
            s = n - s;
        }
        return Signature { r: to_be32(&r), s: to_be32(&s) };
    }
}

/// True iff `sig` is a valid signature of `SHA-256(message)` under `pubkey`.
/// Off-curve keys and out-of-range scalars yield `false`.
pub fn verify(pubkey: &PublicKey, message: &[u8], sig: &Signature) -> bool {
    verify_digest(pubkey, &sha256(message), sig)
}

pub fn verify_digest(pubkey: &PublicKey, digest: &[u8; 32], sig: &Signature) -> bool {
    let n = &CURVE.n;
    if !pubkey.is_on_curve() {
        return false;
    }
    let r = BigUint::from_bytes_be(&sig.r);
    let s = BigUint::from_bytes_be(&sig.s);
    if r.is_zero() || s.is_zero() || &r >= n || &s >= n {
        return false;
    }
    let z = BigUint::from_bytes_be(digest) % n;
    let w = scalar_inv(&s);
    let u1 = (&z * &w) % n;
    let u2 = (&r * &w) % n;
    match mul_base_add(&u1, &u2, &pubkey.0).to_affine() {
        Some(point) => point.x % n == r,
        None => false,
    }
}

/// `n - s`, exposed for tests of the normalization rule.
pub fn negate_s(sig: &Signature) -> Signature {
    let s = BigUint::from_bytes_be(&sig.s);
    Signature { r: sig.r, s: to_be32(&(&CURVE.n - s)) }
}
