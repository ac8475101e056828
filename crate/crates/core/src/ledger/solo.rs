use super::{assemble_block, Amount, Block, BlockError, ChainParams, LedgerState, Transaction, TxError, TxId};
use crate::crypto::{Address, KeyPair};

/// A chain with a single block producer, for fixtures that need real
/// transfers but no network.
#[derive(Debug, Clone)]
pub struct SoloChain {
    pub params: ChainParams,
    miner: KeyPair,
    blocks: Vec<Block>,
    state: LedgerState,
    pool: Vec<Transaction>,
}

impl SoloChain {
    pub fn new(params: ChainParams, miner: KeyPair) -> SoloChain {
        SoloChain { params, miner, blocks: Vec::new(), state: LedgerState::new(), pool: Vec::new() }
    }

    pub fn miner(&self) -> Address {
        self.miner.address
    }

    pub fn state(&self) -> &LedgerState {
        &self.state
    }

    pub(crate) fn state_mut(&mut self) -> &mut LedgerState {
        &mut self.state
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn height(&self) -> u64 {
        self.blocks.len() as u64
    }

    pub fn balance(&self, a: &Address) -> Amount {
        self.state.balance(a)
    }

    /// Queues `tx` if it stays valid after everything already queued.
    pub fn submit(&mut self, tx: Transaction) -> Result<TxId, TxError> {
        let mut scratch = self.state.clone();
        let k = scratch.next_height;
        for t in &self.pool {
            scratch.apply_tx(t, &self.params, k)?;
        }
        scratch.apply_tx(&tx, &self.params, k)?;
        let id = tx.id();
        self.pool.push(tx);
        Ok(id)
    }

    /// Seals the queued transactions into the next block.
    pub fn mine(&mut self) -> Result<&Block, BlockError> {
        let txs = std::mem::take(&mut self.pool);
        let block = assemble_block(&self.state, &self.params, &self.miner, txs, Vec::new(), 1 << 40)
            .expect("fees bounded and puzzle solvable");
        self.state.apply_block_in_place(&block, &self.params)?;
        self.blocks.push(block);
        Ok(self.blocks.last().expect("just pushed"))
    }

    /// Blocks from the one holding `tx` to the tip, zero if absent.
    pub fn confirmations(&self, tx: &TxId) -> u64 {
        self.blocks
            .iter()
            .position(|b| b.txs.iter().any(|t| t.id() == *tx))
            .map_or(0, |k| self.height() - k as u64)
    }
}
