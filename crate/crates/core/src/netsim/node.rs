use std::collections::{HashMap, HashSet};
use std::rc::Rc;

use sha2::{Digest as _, Sha256};

use super::config::Role;
use crate::consensus::ChainView;
use crate::crypto::{Address, Digest, KeyPair, SignatureScheme};
use crate::ledger::{Amount, Block, LedgerState, Nonce, Transaction, TxId, TxInput, TxOutput, TxVariant};

/// What a participant wants paid; handed to the key constructor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransferOrder {
    pub to: Address,
    pub amount: Amount,
    pub fee: Amount,
}

/// The key-holding part of a client. It sees orders and ledger state and
/// hands out signed transaction bytes, nothing else.
#[derive(Debug, Clone)]
pub struct Wallet {
    key: KeyPair,
    issued: u64,
}

impl Wallet {
    /// Key derived from the participant name, so runs with different seeds
    /// share addresses.
    pub fn for_name(scheme: SignatureScheme, name: &str) -> Wallet {
        let mut ctr = 0u32;
        loop {
            let secret: [u8; 32] = Sha256::new()
                .chain_update(b"participant-key")
                .chain_update(name.as_bytes())
                .chain_update(ctr.to_be_bytes())
                .finalize()
                .into();
            if let Ok(key) = KeyPair::from_secret(scheme, secret) {
                return Wallet { key, issued: 0 };
            }
            ctr += 1;
        }
    }

    pub fn address(&self) -> Address {
        self.key.address
    }

    pub(crate) fn key(&self) -> &KeyPair {
        &self.key
    }

    /// Next sequence number, counting transactions issued but not yet in
    /// `state`.
    pub fn next_seq(&self, state: &LedgerState) -> u64 {
        state.next_seq(&self.key.address).max(self.issued)
    }

    pub fn construct(&mut self, state: &LedgerState, order: &TransferOrder, nonce: Nonce) -> Vec<u8> {
        let seq = self.next_seq(state);
        self.construct_at(seq, order, nonce)
    }

    /// Signs a transfer spending sequence number `seq`, whether or not it
    /// was used before.
    pub fn construct_at(&mut self, seq: u64, order: &TransferOrder, nonce: Nonce) -> Vec<u8> {
        let input = TxInput {
            address: self.key.address,
            amount: order.amount.checked_add(order.fee).expect("order amount overflow"),
            seq,
        };
        let out = TxOutput { address: order.to, amount: order.amount };
        let tx = Transaction::unsigned(nonce, vec![input], vec![out], order.fee, TxVariant::Ordinary).signed(&[&self.key]);
        self.issued = self.issued.max(seq + 1);
        tx.canonical_bytes()
    }
}

/// A block with its digest, shared between recipients.
#[derive(Debug)]
pub struct Sealed {
    pub digest: Digest,
    pub block: Block,
}

/// One simulated participant.
#[derive(Debug)]
pub struct Node {
    pub name: String,
    pub role: Role,
    pub hash_power: f64,
    pub isolated_constructor: bool,
    pub(crate) wallet: Option<Wallet>,
    pub view: ChainView,
    /// Every block heard of, by digest.
    pub(crate) known: HashMap<Digest, Rc<Sealed>>,
    pub(crate) orphans: Vec<Rc<Sealed>>,
    pub(crate) mempool: Vec<Transaction>,
    pub(crate) mempool_ids: HashSet<TxId>,
    pub(crate) mine_gen: u64,
    pub(crate) template: Option<Block>,
    /// While attacking: mined blocks stay private, and this is the honest
    /// chain as far as the attacker has heard.
    pub(crate) public: Option<ChainView>,
}

impl Node {
    pub fn address(&self) -> Option<Address> {
        self.wallet.as_ref().map(Wallet::address)
    }

    pub fn is_withholding(&self) -> bool {
        self.public.is_some()
    }

    /// Network-facing placement: takes transaction bytes from the
    /// constructor into the local pool. Returns the transaction if new.
    pub(crate) fn place(&mut self, bytes: &[u8]) -> Option<Transaction> {
        let tx = Transaction::from_bytes(bytes).ok()?;
        self.accept_tx(tx.clone()).then_some(tx)
    }

    pub(crate) fn accept_tx(&mut self, tx: Transaction) -> bool {
        if self.view.state().seen_nonces.contains(&tx.nonce) || !self.mempool_ids.insert(tx.id()) {
            return false;
        }
        self.mempool.push(tx);
        true
    }

    /// Drops pool entries already in the chain.
    pub(crate) fn prune_mempool(&mut self) {
        let state = self.view.state();
        let ids = &mut self.mempool_ids;
        self.mempool.retain(|t| {
            let keep = !state.seen_nonces.contains(&t.nonce);
            if !keep {
                ids.remove(&t.id());
            }
            keep
        });
    }
}
