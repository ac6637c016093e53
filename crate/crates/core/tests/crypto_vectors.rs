//! Frozen hash and signature vectors, plus a cross-check against k256.

use k256::ecdsa::signature::{Signer, Verifier};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use trainchain_core::crypto::{generate_keypair, negate_s, sign, verify, KeyPair, PublicKey, Signature};
use trainchain_core::double_sha256;

#[derive(Deserialize)]
struct HashVectors {
    double_sha256: Vec<HashVector>,
}

#[derive(Deserialize)]
struct HashVector {
    label: String,
    input_hex: String,
    repeat: usize,
    double_sha256: String,
}

#[derive(Deserialize)]
struct EcdsaVectors {
    ecdsa_secp256k1_sha256_rfc6979_low_s: Vec<EcdsaVector>,
}

#[derive(Deserialize)]
struct EcdsaVector {
    secret: String,
    message: String,
    public_key: String,
    r: String,
    s: String,
}

fn hash_vectors() -> Vec<HashVector> {
    serde_json::from_str::<HashVectors>(include_str!("fixtures/double_sha256.json")).unwrap().double_sha256
}

fn ecdsa_vectors() -> Vec<EcdsaVector> {
    serde_json::from_str::<EcdsaVectors>(include_str!("fixtures/ecdsa_rfc6979.json"))
        .unwrap()
        .ecdsa_secp256k1_sha256_rfc6979_low_s
}

#[test]
fn double_sha256_standard_vectors() {
    let vectors = hash_vectors();
    assert_eq!(vectors.len(), 3);
    for v in vectors {
        let input = hex::decode(&v.input_hex).unwrap().repeat(v.repeat);
        assert_eq!(double_sha256(&input).to_hex(), v.double_sha256, "{}", v.label);
    }
}

#[test]
fn rfc6979_vectors_reproduce_exactly() {
    let vectors = ecdsa_vectors();
    assert_eq!(vectors.len(), 5);
    for v in vectors {
        let secret: [u8; 32] = hex::decode(&v.secret).unwrap().try_into().unwrap();
        let key = KeyPair::from_secret_bytes(&secret).unwrap();
        assert_eq!(key.public_key().to_hex(), v.public_key);
        let sig = sign(&key, v.message.as_bytes());
        assert_eq!(hex::encode(sig.r), v.r, "r for {:?}", v.message);
        assert_eq!(hex::encode(sig.s), v.s, "s for {:?}", v.message);
        assert!(sig.is_low_s());
        assert!(verify(key.public_key(), v.message.as_bytes(), &sig));
    }
}

#[test]
fn agrees_with_k256_on_random_keys() {
    let mut rng = ChaCha8Rng::seed_from_u64(6979);
    for _ in 0..40 {
        let key = generate_keypair(&rng.random());
        let len = rng.random_range(0..200);
        let msg: Vec<u8> = (0..len).map(|_| rng.random()).collect();

        let theirs = k256::ecdsa::SigningKey::from_bytes(&key.secret_bytes().into()).unwrap();
        let their_pub = theirs.verifying_key().to_encoded_point(true);
        assert_eq!(their_pub.as_bytes(), key.public_key().to_compressed());

        let their_sig: k256::ecdsa::Signature = theirs.sign(&msg);
        let ours = sign(&key, &msg);
        assert_eq!(their_sig.to_bytes()[..], ours.to_bytes());

        let parsed = k256::ecdsa::Signature::from_slice(&ours.to_bytes()).unwrap();
        assert!(theirs.verifying_key().verify(&msg, &parsed).is_ok());
    }
}

fn flip_bit(bytes: &mut [u8], bit: usize) {
    bytes[bit / 8] ^= 1 << (bit % 8);
}

/// No single-bit tamper verifies, wherever it lands.
#[test]
fn tamper_suite_has_no_false_accepts() {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let keys: Vec<KeyPair> = (0..8u8).map(|i| generate_keypair(&[i; 32])).collect();
    let mut false_accepts = 0;
    for case in 0..1000 {
        let key = &keys[case % keys.len()];
        let msg: Vec<u8> = (0..rng.random_range(1..64)).map(|_| rng.random()).collect();
        let sig = sign(key, &msg);
        let accepted = match case % 4 {
            0 => {
                let mut m = msg.clone();
                let bit = rng.random_range(0..m.len() * 8);
                flip_bit(&mut m, bit);
                verify(key.public_key(), &m, &sig)
            }
            1 | 2 => {
                let mut b = sig.to_bytes();
                let half = if case % 4 == 1 { 0 } else { 256 };
                flip_bit(&mut b, half + rng.random_range(0..256));
                verify(key.public_key(), &msg, &Signature::from_bytes(&b))
            }
            _ => {
                let mut pk = key.public_key().to_compressed();
                flip_bit(&mut pk, rng.random_range(0..33 * 8));
                match PublicKey::from_compressed(&pk) {
                    Ok(other) => verify(&other, &msg, &sig),
                    Err(_) => false,
                }
            }
        };
        false_accepts += accepted as usize;
    }
    assert_eq!(false_accepts, 0);
}

#[test]
fn high_s_twin_still_verifies_but_is_never_produced() {
    let key = generate_keypair(&[3; 32]);
    let sig = sign(&key, b"malleable");
    let twin = negate_s(&sig);
    assert!(!twin.is_low_s());
    assert!(verify(key.public_key(), b"malleable", &twin));
}
