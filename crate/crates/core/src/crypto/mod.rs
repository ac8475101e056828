//! Digests, signatures and proof-of-work puzzles.

mod digest;
mod puzzle;
mod sign;

pub use digest::{Digest, HashAlg};
pub use puzzle::{check, solve, solve_parallel, target_for, Puzzle, Solution};
pub use sign::{gen_keypair, sign, verify, Address, KeyPair, SecretKey, Signature, SignatureScheme, ADDRESS_LEN};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("malformed public or secret key")]
    MalformedKey,
    #[error("malformed signature")]
    MalformedSignature,
    #[error("no solution within {0} attempts")]
    Exhausted(u64),
    #[error("search budget must be positive")]
    ZeroBudget,
}
