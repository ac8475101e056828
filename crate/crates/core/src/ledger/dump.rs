//! Chain dump files: each block's canonical bytes prefixed by a 4-byte
//! big-endian length.

use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

use super::codec::CodecError;
use super::{Amount, Block, BlockError, ChainCondition, ChainParams, LedgerState};

#[derive(Debug, Error)]
pub enum DumpError {
    #[error("dump holds no blocks; genesis missing")]
    GenesisMissing,
    #[error("record {index} truncated")]
    Truncated { index: usize },
    #[error("record {index}: {source}")]
    Decode { index: usize, source: CodecError },
    #[error("block {index} violates condition {condition}: {source}")]
    Invalid { index: usize, condition: ChainCondition, source: BlockError },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn write_dump<W: Write>(mut out: W, blocks: &[Block]) -> io::Result<()> {
    for b in blocks {
        let bytes = b.canonical_bytes();
        out.write_all(&(bytes.len() as u32).to_be_bytes())?;
        out.write_all(&bytes)?;
    }
    out.flush()
}

pub fn read_dump(data: &[u8]) -> Result<Vec<Block>, DumpError> {
    let mut blocks = Vec::new();
    let mut pos = 0;
    while pos < data.len() {
        let index = blocks.len();
        let head = data.get(pos..pos + 4).ok_or(DumpError::Truncated { index })?;
        let len = u32::from_be_bytes(head.try_into().unwrap()) as usize;
        pos += 4;
        let body = data.get(pos..pos + len).ok_or(DumpError::Truncated { index })?;
        pos += len;
        blocks.push(Block::from_bytes(body).map_err(|source| DumpError::Decode { index, source })?);
    }
    Ok(blocks)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockSummary {
    pub k: u64,
    pub digest: String,
    pub prev: Option<String>,
    pub miner: String,
    pub n: u64,
    pub m: u64,
    pub g: Amount,
    pub h: Amount,
    pub evidence: usize,
}

pub fn summarize(block: &Block, params: &ChainParams) -> BlockSummary {
    BlockSummary {
        k: block.k,
        digest: block.digest(params.hash).to_hex(),
        prev: block.prev.as_ref().map(|d| d.to_hex()),
        miner: block.step.d.to_hex(),
        n: block.step.n,
        m: block.step.m,
        g: block.step.g,
        h: block.step.h,
        evidence: block.evidence.len(),
    }
}

#[derive(Debug, Clone)]
pub struct ReplayReport {
    pub blocks: usize,
    /// Sum of the per-block difficulties.
    pub total_difficulty: u128,
    pub state: LedgerState,
}

/// Validates a whole chain from genesis, stopping at the first bad block.
pub fn replay(blocks: &[Block], params: &ChainParams) -> Result<ReplayReport, DumpError> {
    if blocks.is_empty() {
        return Err(DumpError::GenesisMissing);
    }
    let mut state = LedgerState::new();
    let mut total_difficulty = 0u128;
    for (index, b) in blocks.iter().enumerate() {
        state
            .apply_block_in_place(b, params)
            .map_err(|source| DumpError::Invalid { index, condition: source.condition(), source })?;
        total_difficulty += b.step.m as u128;
    }
    Ok(ReplayReport { blocks: blocks.len(), total_difficulty, state })
}
