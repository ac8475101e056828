//! Transactions, blocks, the yield schedule and the ledger state machine.

mod amount;
mod block;
mod builder;
pub mod codec;
mod dump;
mod params;
mod schedule;
mod solo;
mod state;
mod tx;

pub use amount::{checked_sum, Amount};
pub use block::{puzzle_seed, Block, MiningStep};
pub use builder::{assemble_block, genesis_block, select_transactions, BuildError};
pub use dump::{read_dump, replay, summarize, write_dump, BlockSummary, DumpError, ReplayReport};
pub use params::{ChainParams, Features};
pub use schedule::{block_yield, circulation_bound, minted_through, scheduled_supply};
pub use solo::SoloChain;
pub use state::{BlockError, ChainCondition, Coin, LedgerState, PendingConditional, TxError, TxRecord};
pub use tx::{DoubleSpendProof, Nonce, Transaction, TxId, TxInput, TxOutput, TxVariant};
