//! From-genesis replay of an accepted block list, written against the
//! transaction rules directly and sharing no state code with the library.

use std::collections::HashMap;

use bitguilder_core::crypto::Address;
use bitguilder_core::ledger::{Block, TxId, TxVariant};

#[derive(Debug, Default, Clone)]
pub struct Oracle {
    pub bal: HashMap<Address, u128>,
    pub pool: u128,
    /// (activation, address, amount)
    pub parked: Vec<(u64, Address, u128)>,
    /// (id, inputs as (address, amount), outputs)
    pub pending: Vec<(TxId, Vec<(Address, u128)>, Vec<(Address, u128)>)>,
    pub destroyed: Vec<Address>,
    pub blocked: Vec<Address>,
    pub minted: u128,
    pub burned: u128,
    pub touched: HashMap<Address, u64>,
    pub effectuated: HashMap<TxId, u64>,
}

impl Oracle {
    fn add(&mut self, a: Address, v: u128, k: u64) {
        *self.bal.entry(a).or_insert(0) += v;
        self.touched.insert(a, k);
    }

    fn sub(&mut self, a: Address, v: u128, k: u64) {
        let b = self.bal.entry(a).or_insert(0);
        assert!(*b >= v, "oracle: overdraft at block {k}");
        *b -= v;
        self.touched.insert(a, k);
    }

    pub fn run(blocks: &[Block]) -> Oracle {
        let mut o = Oracle::default();
        for b in blocks {
            o.block(b);
        }
        o
    }

    pub fn block(&mut self, b: &Block) {
        let k = b.k;
        let due: Vec<_> = self.parked.iter().filter(|p| p.0 == k).cloned().collect();
        self.parked.retain(|p| p.0 != k);
        for (_, a, v) in due {
            self.add(a, v, k);
        }
        let pool_before = self.pool;
        for e in &b.evidence {
            let a = e
                .first
                .inputs
                .iter()
                .find(|i| e.second.inputs.iter().any(|j| j.address == i.address && j.seq == i.seq))
                .unwrap()
                .address;
            let v = self.bal.get(&a).copied().unwrap_or(0);
            self.sub(a, v, k);
            self.pool += v;
            self.blocked.push(a);
        }
        for t in &b.txs {
            let ins: Vec<_> = t.inputs.iter().map(|i| (i.address, i.amount.0)).collect();
            let outs: Vec<_> = t.outputs.iter().map(|o| (o.address, o.amount.0)).collect();
            match t.variant {
                TxVariant::Ordinary | TxVariant::Restitution { .. } => {
                    for (a, v) in ins {
                        self.sub(a, v, k);
                    }
                    for (a, v) in outs {
                        self.add(a, v, k);
                    }
                }
                TxVariant::Future { activation } => {
                    for (a, v) in ins {
                        self.sub(a, v, k);
                    }
                    for (a, v) in outs {
                        self.parked.push((activation, a, v));
                    }
                }
                TxVariant::ConditionalFuture => {
                    let mut ins = ins;
                    self.sub(ins[0].0, t.fee.0, k);
                    ins[0].1 -= t.fee.0;
                    ins.retain(|x| x.1 > 0);
                    self.pending.push((t.id(), ins, outs));
                }
                TxVariant::KeyDestruction => {
                    let a = ins[0].0;
                    self.sub(a, t.fee.0, k);
                    let rest = self.bal.get(&a).copied().unwrap_or(0);
                    self.sub(a, rest, k);
                    self.burned += rest;
                    self.destroyed.push(a);
                }
            }
        }
        let reward = b.step.g.0 + b.step.h.0 + pool_before;
        self.pool -= pool_before;
        self.minted += b.step.h.0;
        self.add(b.step.d, reward, k);
        // Conditional transfers, oldest first, until nothing more fits.
        'scan: loop {
            for idx in 0..self.pending.len() {
                let (_, ins, _) = &self.pending[idx];
                let ok = ins.iter().all(|(a, v)| {
                    !self.destroyed.contains(a)
                        && !self.blocked.contains(a)
                        && self.bal.get(a).copied().unwrap_or(0) >= *v
                });
                if ok {
                    let (id, ins, outs) = self.pending.remove(idx);
                    for (a, v) in ins {
                        self.sub(a, v, k);
                    }
                    for (a, v) in outs {
                        self.add(a, v, k);
                    }
                    self.effectuated.insert(id, k);
                    continue 'scan;
                }
            }
            break;
        }
    }

    pub fn nonzero_balances(&self) -> Vec<(Address, u128)> {
        let mut v: Vec<_> = self.bal.iter().filter(|(_, v)| **v > 0).map(|(a, v)| (*a, *v)).collect();
        v.sort();
        v
    }

    pub fn parked_total(&self) -> u128 {
        self.parked.iter().map(|p| p.2).sum()
    }
}
