//! Key pairs and deterministic ECDSA over secp256k1.

mod ecdsa;
mod secp256k1;

pub use ecdsa::{
    generate_keypair, negate_s, sign, sign_digest, verify, verify_digest, KeyError, KeyPair, PublicKey, Signature,
};
