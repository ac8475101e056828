#![allow(dead_code)]

pub mod meadow;
pub mod oracle;
pub mod trace;

use bitguilder_core::crypto::{KeyPair, SignatureScheme};
use bitguilder_core::ledger::{ChainParams, Features};

pub fn null_key(i: u8) -> KeyPair {
    KeyPair::from_secret(SignatureScheme::Null, [i.max(1); 32]).unwrap()
}

pub fn ecdsa_key(i: u8) -> KeyPair {
    KeyPair::from_secret(SignatureScheme::Ecdsa, [i.max(1); 32]).unwrap()
}

/// Desk schedule, every extension on, trivial puzzles, null signatures.
pub fn test_params() -> ChainParams {
    ChainParams {
        name: "test".into(),
        difficulty: 1,
        signature: SignatureScheme::Null,
        features: Features::all(),
        ..ChainParams::desk()
    }
}

pub fn nonce(i: u64) -> [u8; 16] {
    let mut n = [0u8; 16];
    n[8..].copy_from_slice(&i.to_be_bytes());
    n
}
