use thiserror::Error;

use super::{block_yield, checked_sum, puzzle_seed, Block, ChainParams, DoubleSpendProof, LedgerState, MiningStep, Transaction};
use crate::crypto::{solve, CryptoError, KeyPair, Signature};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("fee total overflows")]
    FeeOverflow,
    #[error(transparent)]
    Puzzle(#[from] CryptoError),
}

/// Builds, solves and signs the next block on top of `state`. The block is
/// not validated; apply it to find out.
pub fn assemble_block(
    state: &LedgerState,
    params: &ChainParams,
    miner: &KeyPair,
    txs: Vec<Transaction>,
    evidence: Vec<DoubleSpendProof>,
    budget: u64,
) -> Result<Block, BuildError> {
    let k = state.next_height;
    let n = txs.len() as u64;
    let g = checked_sum(txs.iter().map(|t| t.fee)).ok_or(BuildError::FeeOverflow)?;
    let h = block_yield(params, k);
    let m = params.difficulty;
    let seed = puzzle_seed(params.hash, k, state.tip.as_ref(), &txs, &evidence, &miner.address, n, m, g, h);
    let step = MiningStep { d: miner.address, n, m, g, h, seed, s: crate::crypto::Solution(0) };
    let s = solve(&step.puzzle(params), budget)?;
    let mut block = Block {
        k,
        prev: state.tip.clone(),
        txs,
        evidence,
        step: MiningStep { s, ..step },
        miner_sig: Signature(Vec::new()),
    };
    block.sign(miner);
    Ok(block)
}

/// The first block: no transactions, the initial coin goes to `miner`.
pub fn genesis_block(params: &ChainParams, miner: &KeyPair, budget: u64) -> Result<Block, BuildError> {
    assemble_block(&LedgerState::new(), params, miner, Vec::new(), Vec::new(), budget)
}

/// Greedy pick, in pool order, of transactions that stay valid when applied
/// one after another on top of `state`.
pub fn select_transactions(state: &LedgerState, params: &ChainParams, pool: &[Transaction], max: usize) -> Vec<Transaction> {
    let mut scratch = state.clone();
    let mut out = Vec::new();
    for tx in pool {
        if out.len() >= max {
            break;
        }
        if scratch.apply_tx(tx, params, state.next_height).is_ok() {
            out.push(tx.clone());
        }
    }
    out
}
