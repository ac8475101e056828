//! Fixtures shared by the benchmarks.

use bitguilder_core::crypto::{KeyPair, SignatureScheme};
use bitguilder_core::ledger::{Amount, Block, ChainParams, SoloChain, Transaction};

pub fn key(i: u8) -> KeyPair {
    KeyPair::from_secret(SignatureScheme::Null, [i.max(1); 32]).expect("nonzero secret")
}

/// Desk schedule at difficulty one; every block after the first carries
/// `txs` small payments from the miner.
pub fn chain(blocks: u64, txs: u64) -> (ChainParams, Vec<Block>) {
    let params = ChainParams { difficulty: 1, signature: SignatureScheme::Null, ..ChainParams::desk() };
    let miner = key(1);
    let to = key(2).address;
    let mut c = SoloChain::new(params.clone(), miner.clone());
    c.mine().expect("genesis");
    let mut nonce = 0u64;
    for _ in 1..blocks {
        let seq = c.state().next_seq(&miner.address);
        for j in 0..txs {
            nonce += 1;
            let mut r = [0u8; 16];
            r[8..].copy_from_slice(&nonce.to_be_bytes());
            c.submit(Transaction::transfer(&miner, seq + j, r, to, Amount(1_000), Amount(1))).expect("funded");
        }
        c.mine().expect("valid block");
    }
    (params, c.blocks().to_vec())
}
