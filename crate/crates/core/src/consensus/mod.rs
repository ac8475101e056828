//! Chain selection, confirmations and fork detection.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::Digest;
use crate::ledger::{Block, BlockError, ChainParams, LedgerState, TxId};
use crate::numerics::Rat;

/// How a participant settles competing histories.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForkRule {
    /// A suffix replaces another only if heavier by more than this fraction.
    pub epsilon: Rat,
    /// Blocks buried this deep can no longer be replaced; `None` disables.
    pub checkpoint: Option<u64>,
}

impl Default for ForkRule {
    fn default() -> Self {
        ForkRule { epsilon: Rat::zero(), checkpoint: Some(100) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "decision")]
pub enum Decision {
    Keep,
    Extend,
    /// Drop the last `depth` blocks and append the candidate.
    Replace { depth: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChooseError {
    #[error("empty candidate")]
    Empty,
    #[error("candidate does not connect to this chain")]
    Disconnected,
    #[error("candidate block {index} invalid: {source}")]
    InvalidCandidate { index: usize, source: BlockError },
    #[error("replacing {depth} blocks reaches the checkpoint at depth {checkpoint}")]
    BelowCheckpoint { depth: u64, checkpoint: u64 },
}

const SNAPSHOT_EVERY: u64 = 16;

/// A validated chain from genesis with its ledger state.
#[derive(Debug, Clone)]
pub struct ChainView {
    pub params: ChainParams,
    blocks: Vec<Block>,
    digests: Vec<Digest>,
    /// `cum[i]` is the total difficulty of blocks `0..=i`.
    cum: Vec<u128>,
    state: LedgerState,
    /// State with `next_height == h`, for `h` a multiple of the snapshot step.
    snapshots: BTreeMap<u64, LedgerState>,
    tx_at: HashMap<TxId, u64>,
}

impl ChainView {
    pub fn new(params: ChainParams) -> ChainView {
        let mut snapshots = BTreeMap::new();
        snapshots.insert(0, LedgerState::new());
        ChainView {
            params,
            blocks: Vec::new(),
            digests: Vec::new(),
            cum: Vec::new(),
            state: LedgerState::new(),
            snapshots,
            tx_at: HashMap::new(),
        }
    }

    pub fn from_blocks(params: ChainParams, blocks: &[Block]) -> Result<ChainView, ChooseError> {
        let mut v = ChainView::new(params);
        for (index, b) in blocks.iter().enumerate() {
            v.push(b).map_err(|source| ChooseError::InvalidCandidate { index, source })?;
        }
        Ok(v)
    }

    pub fn len(&self) -> u64 {
        self.blocks.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, k: u64) -> Option<&Block> {
        self.blocks.get(k as usize)
    }

    pub fn digest_at(&self, k: u64) -> Option<&Digest> {
        self.digests.get(k as usize)
    }

    pub fn tip(&self) -> Option<&Digest> {
        self.digests.last()
    }

    pub fn state(&self) -> &LedgerState {
        &self.state
    }

    pub fn total_difficulty(&self) -> u128 {
        self.cum.last().copied().unwrap_or(0)
    }

    /// Difficulty of blocks `from..len`.
    pub fn suffix_difficulty(&self, from: u64) -> u128 {
        let before = if from == 0 { 0 } else { self.cum[from as usize - 1] };
        self.total_difficulty() - before
    }

    pub fn contains(&self, digest: &Digest) -> bool {
        self.digests.contains(digest)
    }

    pub fn height_of(&self, digest: &Digest) -> Option<u64> {
        self.digests.iter().rposition(|d| d == digest).map(|i| i as u64)
    }

    /// Number of blocks from the one holding `tx` up to the tip; zero if absent.
    pub fn confirmations(&self, tx: &TxId) -> u64 {
        self.tx_at.get(tx).map_or(0, |k| self.len() - k)
    }

    pub fn contains_tx(&self, tx: &TxId) -> bool {
        self.tx_at.contains_key(tx)
    }

    fn push(&mut self, b: &Block) -> Result<(), BlockError> {
        if let Err(e) = self.state.apply_block_in_place(b, &self.params) {
            self.state = self.replay_to(self.len());
            return Err(e);
        }
        self.record(b.clone());
        Ok(())
    }

    fn record(&mut self, b: Block) {
        let snap = (b.k + 1).is_multiple_of(SNAPSHOT_EVERY).then(|| self.state.clone());
        self.record_with(b, snap);
    }

    fn record_with(&mut self, b: Block, snapshot: Option<LedgerState>) {
        for t in &b.txs {
            self.tx_at.insert(t.id(), b.k);
        }
        self.digests.push(b.digest(self.params.hash));
        self.cum.push(self.total_difficulty() + b.step.m as u128);
        self.blocks.push(b);
        if let Some(s) = snapshot {
            self.snapshots.insert(self.len(), s);
        }
    }

    fn truncate(&mut self, len: u64) {
        for b in self.blocks.drain(len as usize..) {
            for t in &b.txs {
                self.tx_at.remove(&t.id());
            }
        }
        self.digests.truncate(len as usize);
        self.cum.truncate(len as usize);
        self.snapshots.retain(|h, _| *h <= len);
    }

    /// Ledger state after the first `len` blocks.
    pub fn state_at(&self, len: u64) -> LedgerState {
        if len == self.len() {
            return self.state.clone();
        }
        self.replay_to(len)
    }

    fn replay_to(&self, len: u64) -> LedgerState {
        let (&h, snap) = self.snapshots.range(..=len).next_back().expect("genesis snapshot");
        let mut s = snap.clone();
        for b in &self.blocks[h as usize..len as usize] {
            s.apply_block_in_place(b, &self.params).expect("stored blocks are valid");
        }
        s
    }

    /// Where `candidate` attaches: the height of its first block.
    fn attach_point(&self, candidate: &[Block]) -> Result<u64, ChooseError> {
        let first = candidate.first().ok_or(ChooseError::Empty)?;
        let fork = first.k;
        if fork > self.len() {
            return Err(ChooseError::Disconnected);
        }
        let expected = if fork == 0 { None } else { Some(&self.digests[fork as usize - 1]) };
        if first.prev.as_ref() != expected {
            return Err(ChooseError::Disconnected);
        }
        Ok(fork)
    }

    fn validate_from(&self, fork: u64, candidate: &[Block]) -> Result<LedgerState, ChooseError> {
        let mut s = self.state_at(fork);
        for (index, b) in candidate.iter().enumerate() {
            s.apply_block_in_place(b, &self.params)
                .map_err(|source| ChooseError::InvalidCandidate { index, source })?;
        }
        Ok(s)
    }

    fn decide(&self, fork: u64, candidate: &[Block], rule: &ForkRule) -> Result<Decision, ChooseError> {
        if fork == self.len() {
            return Ok(Decision::Extend);
        }
        let depth = self.len() - fork;
        // Blocks of the candidate that merely repeat ours are not a fork.
        let mut rest = candidate;
        let mut at = fork;
        while let Some(b) = rest.first() {
            if at < self.len() && self.blocks[at as usize] == *b {
                rest = &rest[1..];
                at += 1;
            } else {
                break;
            }
        }
        if rest.is_empty() {
            return Ok(Decision::Keep);
        }
        if at == self.len() {
            return Ok(Decision::Extend);
        }
        let replaced = self.suffix_difficulty(at);
        let offered: u128 = rest.iter().map(|b| b.step.m as u128).sum();
        let threshold = (Rat::one() + rule.epsilon.clone()) * Rat::from_integer(replaced);
        if Rat::from_integer(offered) <= threshold {
            return Ok(Decision::Keep);
        }
        let depth = depth - (at - fork);
        if let Some(cp) = rule.checkpoint {
            if depth >= cp {
                return Err(ChooseError::BelowCheckpoint { depth, checkpoint: cp });
            }
        }
        Ok(Decision::Replace { depth })
    }

    /// Pure decision on a candidate suffix. The candidate is validated only
    /// when it would be adopted.
    pub fn choose(&self, candidate: &[Block], rule: &ForkRule) -> Result<Decision, ChooseError> {
        let fork = self.attach_point(candidate)?;
        let d = self.decide(fork, candidate, rule)?;
        if d != Decision::Keep {
            self.validate_from(fork, candidate)?;
        }
        Ok(d)
    }

    /// Like [`choose`](Self::choose) but also switches to the candidate
    /// when the decision is to extend or replace.
    pub fn adopt(&mut self, candidate: &[Block], rule: &ForkRule) -> Result<Decision, ChooseError> {
        let fork = self.attach_point(candidate)?;
        let d = self.decide(fork, candidate, rule)?;
        if d == Decision::Keep {
            return Ok(d);
        }
        let mut s = self.state_at(fork);
        let mut accepted = Vec::with_capacity(candidate.len());
        for (index, b) in candidate.iter().enumerate() {
            s.apply_block_in_place(b, &self.params)
                .map_err(|source| ChooseError::InvalidCandidate { index, source })?;
            accepted.push((b.clone(), s.next_height.is_multiple_of(SNAPSHOT_EVERY).then(|| s.clone())));
        }
        self.truncate(fork);
        for (b, snap) in accepted {
            self.record_with(b, snap);
        }
        self.state = s;
        Ok(d)
    }

    /// Appends one block at the tip.
    pub fn extend(&mut self, block: &Block) -> Result<(), ChooseError> {
        if block.k != self.len() || block.prev.as_ref() != self.tip() {
            return Err(ChooseError::Disconnected);
        }
        self.push(block).map_err(|source| ChooseError::InvalidCandidate { index: 0, source })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TipInfo {
    pub digest: String,
    pub height: u64,
    pub participants: Vec<usize>,
}

/// Distinct tips across participants; empty when everybody agrees.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ForkReport {
    pub tips: Vec<TipInfo>,
    /// Highest block number on which all views agree.
    pub common_ancestor: Option<u64>,
}

impl ForkReport {
    pub fn is_empty(&self) -> bool {
        self.tips.is_empty()
    }
}

pub fn detect_forks(views: &[&ChainView]) -> ForkReport {
    let mut by_tip: BTreeMap<(u64, Option<Digest>), Vec<usize>> = BTreeMap::new();
    for (i, v) in views.iter().enumerate() {
        by_tip.entry((v.len(), v.tip().cloned())).or_default().push(i);
    }
    if by_tip.len() <= 1 {
        return ForkReport::default();
    }
    let shortest = views.iter().map(|v| v.len()).min().unwrap_or(0);
    let common_ancestor = (0..shortest)
        .rev()
        .find(|&k| views.iter().all(|v| v.digest_at(k) == views[0].digest_at(k)));
    let tips = by_tip
        .into_iter()
        .map(|((len, d), participants)| TipInfo {
            digest: d.map(|d| d.to_hex()).unwrap_or_default(),
            height: len.saturating_sub(1),
            participants,
        })
        .collect();
    ForkReport { tips, common_ancestor }
}

/// A fork report stamped with the simulated time it was taken at.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ForkRecord {
    pub time: Rat,
    #[serde(flatten)]
    pub report: ForkReport,
}
