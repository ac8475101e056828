use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use super::schedule::block_yield;
use super::{checked_sum, Amount, Block, ChainParams, DoubleSpendProof, Nonce, Transaction, TxId, TxInput, TxOutput, TxVariant};
use crate::crypto::{check, Address, Digest};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TxError {
    #[error("signature missing or invalid")]
    BadSignature,
    #[error("nonce already used")]
    ReplayedNonce,
    #[error("insufficient funds at {address}: needs {needed}, holds {available}")]
    InsufficientFunds { address: Address, needed: Amount, available: Amount },
    #[error("address {0} is destroyed")]
    DestroyedAddress(Address),
    #[error("address {0} is blocked after a proven double spend")]
    BlockedAddress(Address),
    #[error("malformed transaction: {0}")]
    Malformed(String),
    #[error("fee {fee} below minimum {min}")]
    FeeTooLow { fee: Amount, min: Amount },
    #[error("a restitution cannot be restituted")]
    RestitutionOfRestitution,
    #[error("unknown original transaction {0}")]
    UnknownOriginal(TxId),
    #[error("restitution from {0} already made")]
    AlreadyRestituted(Address),
    #[error("sequence {got} at {address}, expected {expected}")]
    StaleSequence { address: Address, expected: u64, got: u64 },
    #[error("{0} transactions are disabled on this chain")]
    FeatureDisabled(&'static str),
    #[error("transfers to {0} are still pending")]
    PendingObligations(Address),
}

/// Chain condition a block violates; `Puzzle` covers the mining step's
/// difficulty, seed and solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainCondition {
    A,
    B,
    C,
    D,
    E,
    Puzzle,
}

impl fmt::Display for ChainCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChainCondition::A => "(a)",
            ChainCondition::B => "(b)",
            ChainCondition::C => "(c)",
            ChainCondition::D => "(d)",
            ChainCondition::E => "(e)",
            ChainCondition::Puzzle => "(puzzle)",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BlockError {
    #[error("block number {got}, expected {expected}")]
    WrongHeight { expected: u64, got: u64 },
    #[error("predecessor digest does not match the tip")]
    WrongPrev,
    #[error("n = {n} but the block holds {txs} transactions")]
    CountMismatch { n: u64, txs: usize },
    #[error("g = {claimed} but the fees sum to {actual}")]
    FeeSum { claimed: Amount, actual: Amount },
    #[error("h = {claimed} but the yield is {expected}")]
    WrongYield { claimed: Amount, expected: Amount },
    #[error("difficulty {got} below the required {expected}")]
    WrongDifficulty { expected: u64, got: u64 },
    #[error("miner address {0} is destroyed or blocked")]
    MinerUnusable(Address),
    #[error("miner signature invalid")]
    BadMinerSignature,
    #[error("puzzle seed does not match the block contents")]
    BadSeed,
    #[error("solution does not solve the puzzle")]
    BadSolution,
    #[error("evidence {index}: {reason}")]
    BadEvidence { index: usize, reason: String },
    #[error("transaction {index}: {error}")]
    Tx { index: usize, error: TxError },
}

impl BlockError {
    pub fn condition(&self) -> ChainCondition {
        match self {
            BlockError::WrongHeight { .. } | BlockError::WrongPrev => ChainCondition::A,
            BlockError::BadMinerSignature | BlockError::Tx { error: TxError::BadSignature, .. } => ChainCondition::B,
            BlockError::CountMismatch { .. } => ChainCondition::C,
            BlockError::FeeSum { .. } => ChainCondition::D,
            BlockError::WrongDifficulty { .. } | BlockError::BadSeed | BlockError::BadSolution => ChainCondition::Puzzle,
            _ => ChainCondition::E,
        }
    }
}

/// What later restitutions need to know about an applied transaction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TxRecord {
    pub height: u64,
    pub sender: Address,
    pub outputs: Vec<TxOutput>,
    pub restitution: bool,
    /// For conditional transactions, the height at which they took effect.
    pub effectuated_at: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingConditional {
    pub id: TxId,
    /// Inputs still to be debited; the fee has already left the first one.
    pub inputs: Vec<TxInput>,
    pub outputs: Vec<TxOutput>,
    pub admitted_at: u64,
}

/// The public function `q` plus everything validation needs to remember.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LedgerState {
    /// Number of the next block to apply.
    pub next_height: u64,
    pub tip: Option<Digest>,
    pub balances: BTreeMap<Address, Amount>,
    pub seen_nonces: BTreeSet<Nonce>,
    pub next_seq: BTreeMap<Address, u64>,
    pub destroyed: BTreeSet<Address>,
    pub blocked: BTreeSet<Address>,
    pub penalty_pool: Amount,
    /// Future outputs by activation height.
    pub parked: BTreeMap<u64, Vec<TxOutput>>,
    pub pending: Vec<PendingConditional>,
    pub last_touch: BTreeMap<Address, u64>,
    pub records: BTreeMap<TxId, TxRecord>,
    pub restituted: BTreeSet<(TxId, Address)>,
    pub minted_total: Amount,
    pub destroyed_total: Amount,
}

/// An informational coin: an address with its amount and age in blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coin {
    pub address: Address,
    pub amount: Amount,
    pub age: u64,
}

fn malformed(msg: &str) -> TxError {
    TxError::Malformed(msg.to_string())
}

impl LedgerState {
    pub fn new() -> Self {
        LedgerState::default()
    }

    pub fn balance(&self, a: &Address) -> Amount {
        self.balances.get(a).copied().unwrap_or(Amount::ZERO)
    }

    pub fn next_seq(&self, a: &Address) -> u64 {
        self.next_seq.get(a).copied().unwrap_or(0)
    }

    pub fn parked_total(&self) -> Amount {
        checked_sum(self.parked.values().flatten().map(|o| o.amount)).expect("overflow")
    }

    pub fn balance_total(&self) -> Amount {
        checked_sum(self.balances.values().copied()).expect("overflow")
    }

    /// `Σ balances + penalty pool + parked future outputs = minted − destroyed`.
    pub fn conservation_holds(&self) -> bool {
        let held = self.balance_total().0 + self.penalty_pool.0 + self.parked_total().0;
        self.minted_total.0.checked_sub(self.destroyed_total.0) == Some(held)
    }

    /// Blocks since the last transaction touching `a`; zero if never touched.
    pub fn coin_age(&self, a: &Address, current: u64) -> u64 {
        self.last_touch.get(a).map_or(0, |t| current.saturating_sub(*t))
    }

    pub fn coin(&self, a: &Address, current: u64) -> Coin {
        Coin { address: *a, amount: self.balance(a), age: self.coin_age(a, current) }
    }

    fn credit(&mut self, a: Address, amount: Amount, height: u64) {
        if !amount.is_zero() {
            let e = self.balances.entry(a).or_insert(Amount::ZERO);
            *e = e.checked_add(amount).expect("balance overflow");
        }
        self.last_touch.insert(a, height);
    }

    fn debit(&mut self, a: Address, amount: Amount, height: u64) {
        let left = self.balance(&a).checked_sub(amount).expect("debit checked before");
        if left.is_zero() {
            self.balances.remove(&a);
        } else {
            self.balances.insert(a, left);
        }
        self.last_touch.insert(a, height);
    }

    fn usable(&self, a: &Address) -> Result<(), TxError> {
        if self.destroyed.contains(a) {
            return Err(TxError::DestroyedAddress(*a));
        }
        if self.blocked.contains(a) {
            return Err(TxError::BlockedAddress(*a));
        }
        Ok(())
    }

    fn covers(&self, i: &TxInput) -> Result<(), TxError> {
        let available = self.balance(&i.address);
        if i.amount > available {
            return Err(TxError::InsufficientFunds { address: i.address, needed: i.amount, available });
        }
        Ok(())
    }

    fn incoming_pending(&self, a: &Address) -> bool {
        self.parked.values().flatten().any(|o| o.address == *a)
            || self.pending.iter().any(|p| p.outputs.iter().any(|o| o.address == *a))
    }

    /// Checks `tx` against this state as if it were included in the next block.
    pub fn validate_transaction(&self, tx: &Transaction, params: &ChainParams) -> Result<(), TxError> {
        self.clone().apply_tx(tx, params, self.next_height).map(|_| ())
    }

    fn check_structure(&self, tx: &Transaction, params: &ChainParams, height: u64) -> Result<(), TxError> {
        if tx.inputs.is_empty() {
            return Err(malformed("no inputs"));
        }
        let distinct: BTreeSet<_> = tx.inputs.iter().map(|i| i.address).collect();
        if distinct.len() != tx.inputs.len() {
            return Err(malformed("repeated input address"));
        }
        if tx.inputs.iter().any(|i| i.amount.is_zero()) || tx.outputs.iter().any(|o| o.amount.is_zero()) {
            return Err(malformed("zero amount"));
        }
        let total_in = tx.input_total().ok_or_else(|| malformed("input overflow"))?;
        let total_out = tx.output_total().ok_or_else(|| malformed("output overflow"))?;
        if total_out.checked_add(tx.fee) != Some(total_in) {
            return Err(malformed("inputs must equal outputs plus fee"));
        }
        let f = &params.features;
        match tx.variant {
            TxVariant::Ordinary => {}
            TxVariant::Future { activation } => {
                if !f.future {
                    return Err(TxError::FeatureDisabled("future"));
                }
                if activation <= height {
                    return Err(malformed("activation height already reached"));
                }
            }
            TxVariant::ConditionalFuture => {
                if !f.conditional {
                    return Err(TxError::FeatureDisabled("conditional-future"));
                }
            }
            TxVariant::Restitution { .. } => {
                if !f.restitution {
                    return Err(TxError::FeatureDisabled("restitution"));
                }
                if tx.inputs.len() != 1 || tx.outputs.len() != 1 {
                    return Err(malformed("restitution needs one input and one output"));
                }
            }
            TxVariant::KeyDestruction => {
                if !f.destruction {
                    return Err(TxError::FeatureDisabled("key-destruction"));
                }
                if tx.inputs.len() != 1 || !tx.outputs.is_empty() {
                    return Err(malformed("key destruction needs one input and no outputs"));
                }
            }
        }
        if tx.outputs.is_empty() && tx.variant != TxVariant::KeyDestruction {
            return Err(malformed("no outputs"));
        }
        let exempt = matches!(tx.variant, TxVariant::Restitution { .. });
        if !exempt && tx.fee < params.min_fee {
            return Err(TxError::FeeTooLow { fee: tx.fee, min: params.min_fee });
        }
        Ok(())
    }

    /// Applies one transaction in place and returns its fee. On error the
    /// state is unchanged.
    pub(crate) fn apply_tx(&mut self, tx: &Transaction, params: &ChainParams, height: u64) -> Result<Amount, TxError> {
        self.check_structure(tx, params, height)?;
        if !tx.signatures_valid(params.signature) {
            return Err(TxError::BadSignature);
        }
        if self.seen_nonces.contains(&tx.nonce) {
            return Err(TxError::ReplayedNonce);
        }
        for i in &tx.inputs {
            self.usable(&i.address)?;
            let expected = self.next_seq(&i.address);
            if i.seq != expected {
                return Err(TxError::StaleSequence { address: i.address, expected, got: i.seq });
            }
        }
        for o in &tx.outputs {
            if self.destroyed.contains(&o.address) {
                return Err(TxError::DestroyedAddress(o.address));
            }
        }
        match tx.variant {
            TxVariant::ConditionalFuture => {
                let first = &tx.inputs[0];
                self.covers(&TxInput { amount: tx.fee, ..*first })?;
            }
            TxVariant::Restitution { original } => {
                let rec = self.records.get(&original).ok_or(TxError::UnknownOriginal(original))?;
                if rec.restitution {
                    return Err(TxError::RestitutionOfRestitution);
                }
                let input = &tx.inputs[0];
                if tx.outputs[0].address != rec.sender {
                    return Err(malformed("restitution must return to the original sender"));
                }
                let received = checked_sum(
                    rec.outputs.iter().filter(|o| o.address == input.address).map(|o| o.amount),
                )
                .expect("overflow");
                if received.is_zero() {
                    return Err(malformed("input address was not paid by the original"));
                }
                if tx.output_total() > Some(received) {
                    return Err(malformed("restitution exceeds the original amount"));
                }
                if self.restituted.contains(&(original, input.address)) {
                    return Err(TxError::AlreadyRestituted(input.address));
                }
                self.covers(input)?;
            }
            TxVariant::KeyDestruction => {
                let input = &tx.inputs[0];
                if input.amount != tx.fee {
                    return Err(malformed("key destruction spends exactly its fee"));
                }
                if self.incoming_pending(&input.address) {
                    return Err(TxError::PendingObligations(input.address));
                }
                self.covers(input)?;
            }
            _ => {
                for i in &tx.inputs {
                    self.covers(i)?;
                }
            }
        }

        // All checks passed; mutate.
        let id = tx.id();
        self.seen_nonces.insert(tx.nonce);
        for i in &tx.inputs {
            *self.next_seq.entry(i.address).or_insert(0) += 1;
        }
        let mut restitution = false;
        match tx.variant {
            TxVariant::Ordinary => {
                self.transfer(&tx.inputs, &tx.outputs, height);
            }
            TxVariant::Restitution { original } => {
                restitution = true;
                self.restituted.insert((original, tx.inputs[0].address));
                self.transfer(&tx.inputs, &tx.outputs, height);
            }
            TxVariant::Future { activation } => {
                for i in &tx.inputs {
                    self.debit(i.address, i.amount, height);
                }
                self.parked.entry(activation).or_default().extend(tx.outputs.iter().copied());
            }
            TxVariant::ConditionalFuture => {
                let mut inputs = tx.inputs.clone();
                self.debit(inputs[0].address, tx.fee, height);
                inputs[0].amount = Amount(inputs[0].amount.0 - tx.fee.0);
                if inputs[0].amount.is_zero() {
                    inputs.remove(0);
                }
                self.pending.push(PendingConditional { id, inputs, outputs: tx.outputs.clone(), admitted_at: height });
            }
            TxVariant::KeyDestruction => {
                let a = tx.inputs[0].address;
                self.debit(a, tx.fee, height);
                let residue = self.balance(&a);
                self.balances.remove(&a);
                self.destroyed_total = self.destroyed_total.checked_add(residue).expect("overflow");
                self.destroyed.insert(a);
            }
        }
        self.records.insert(
            id,
            TxRecord {
                height,
                sender: tx.inputs[0].address,
                outputs: tx.outputs.clone(),
                restitution,
                effectuated_at: None,
            },
        );
        Ok(tx.fee)
    }

    fn transfer(&mut self, inputs: &[TxInput], outputs: &[TxOutput], height: u64) {
        for i in inputs {
            self.debit(i.address, i.amount, height);
        }
        for o in outputs {
            self.credit(o.address, o.amount, height);
        }
    }

    fn check_evidence(&self, p: &DoubleSpendProof, params: &ChainParams) -> Result<Address, String> {
        if !params.features.penalties {
            return Err("double-spend penalties are disabled".into());
        }
        if p.first.id() == p.second.id() {
            return Err("the two transactions are identical".into());
        }
        if !p.first.signatures_valid(params.signature) || !p.second.signatures_valid(params.signature) {
            return Err("unsigned transaction in proof".into());
        }
        let (a, _) = p.first.shared_coin(&p.second).ok_or("transactions share no coin")?;
        if self.blocked.contains(&a) {
            return Err("address already penalized".into());
        }
        Ok(a)
    }

    /// Moves everything held at a double-spending address into the penalty
    /// pool and retires both nonces. Transactions already applied stay.
    fn apply_evidence(&mut self, p: &DoubleSpendProof, params: &ChainParams, height: u64) -> Result<(), String> {
        let a = self.check_evidence(p, params)?;
        let held = self.balance(&a);
        self.debit(a, held, height);
        self.penalty_pool = self.penalty_pool.checked_add(held).expect("overflow");
        self.blocked.insert(a);
        self.seen_nonces.insert(p.first.nonce);
        self.seen_nonces.insert(p.second.nonce);
        Ok(())
    }

    fn can_effectuate(&self, p: &PendingConditional) -> bool {
        p.inputs.iter().all(|i| self.usable(&i.address).is_ok() && self.covers(i).is_ok())
    }

    /// Effectuates pending conditional transactions in admission order until
    /// none more can go through.
    fn scan_conditionals(&mut self, height: u64) {
        loop {
            let Some(pos) = self.pending.iter().position(|p| self.can_effectuate(p)) else {
                return;
            };
            let p = self.pending.remove(pos);
            self.transfer(&p.inputs, &p.outputs, height);
            if let Some(r) = self.records.get_mut(&p.id) {
                r.effectuated_at = Some(height);
            }
        }
    }

    /// Validates `block` as the next block and returns the resulting state.
    /// `self` is left untouched on error.
    pub fn apply_block(&self, block: &Block, params: &ChainParams) -> Result<LedgerState, BlockError> {
        let mut next = self.clone();
        next.apply_block_in_place(block, params)?;
        Ok(next)
    }

    /// Same as [`apply_block`](Self::apply_block) but mutates; on error the
    /// state may be partially updated and must be discarded.
    pub fn apply_block_in_place(&mut self, block: &Block, params: &ChainParams) -> Result<(), BlockError> {
        let k = block.k;
        if k != self.next_height {
            return Err(BlockError::WrongHeight { expected: self.next_height, got: k });
        }
        if block.prev != self.tip {
            return Err(BlockError::WrongPrev);
        }
        let step = &block.step;
        if step.n != block.txs.len() as u64 {
            return Err(BlockError::CountMismatch { n: step.n, txs: block.txs.len() });
        }
        let fees = checked_sum(block.txs.iter().map(|t| t.fee)).ok_or(BlockError::FeeSum {
            claimed: step.g,
            actual: Amount(u128::MAX),
        })?;
        if fees != step.g {
            return Err(BlockError::FeeSum { claimed: step.g, actual: fees });
        }
        let y = block_yield(params, k);
        if step.h != y {
            return Err(BlockError::WrongYield { claimed: step.h, expected: y });
        }
        if step.m < params.difficulty {
            return Err(BlockError::WrongDifficulty { expected: params.difficulty, got: step.m });
        }
        if self.usable(&step.d).is_err() {
            return Err(BlockError::MinerUnusable(step.d));
        }
        if !block.miner_signature_valid(params) {
            return Err(BlockError::BadMinerSignature);
        }
        if step.seed != block.expected_seed(params.hash) {
            return Err(BlockError::BadSeed);
        }
        if !check(&step.puzzle(params), step.s) {
            return Err(BlockError::BadSolution);
        }

        if let Some(arrivals) = self.parked.remove(&k) {
            for o in arrivals {
                self.credit(o.address, o.amount, k);
            }
        }
        let pool_before = self.penalty_pool;
        for (index, p) in block.evidence.iter().enumerate() {
            self.apply_evidence(p, params, k).map_err(|reason| BlockError::BadEvidence { index, reason })?;
        }
        for (index, tx) in block.txs.iter().enumerate() {
            self.apply_tx(tx, params, k).map_err(|error| BlockError::Tx { index, error })?;
        }
        self.penalty_pool = Amount(self.penalty_pool.0 - pool_before.0);
        let reward = step.g.checked_add(step.h).and_then(|r| r.checked_add(pool_before)).expect("overflow");
        self.credit(step.d, reward, k);
        self.minted_total = self.minted_total.checked_add(step.h).expect("overflow");
        self.scan_conditionals(k);
        self.next_height = k + 1;
        self.tip = Some(block.digest(params.hash));
        Ok(())
    }

    /// Managed issuance: new supply credited to `to`.
    pub(crate) fn mint(&mut self, to: Address, amount: Amount) {
        self.credit(to, amount, self.next_height.saturating_sub(1));
        self.minted_total = self.minted_total.checked_add(amount).expect("overflow");
    }

    /// Managed contraction: supply withdrawn from `from`.
    pub(crate) fn retire(&mut self, from: Address, amount: Amount) -> Result<(), TxError> {
        self.covers(&TxInput { address: from, amount, seq: 0 })?;
        self.debit(from, amount, self.next_height.saturating_sub(1));
        self.destroyed_total = self.destroyed_total.checked_add(amount).expect("overflow");
        Ok(())
    }
}
