//! Random block traces exercising every transaction kind.

use std::collections::HashMap;

use bitguilder_core::crypto::{Address, KeyPair};
use bitguilder_core::ledger::{
    assemble_block, select_transactions, Amount, Block, ChainParams, DoubleSpendProof, LedgerState, Transaction,
    TxInput, TxOutput, TxVariant,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Trace {
    pub blocks: Vec<Block>,
    /// State after each block.
    pub states: Vec<LedgerState>,
    pub keys: Vec<KeyPair>,
}

pub fn random_trace(seed: u64, n_blocks: usize, params: &ChainParams) -> Trace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keys: Vec<KeyPair> = (1..=6).map(super::null_key).collect();
    let mut state = LedgerState::new();
    let mut blocks = Vec::new();
    let mut states = Vec::new();
    let mut nonce_ctr = seed << 24;
    // Applied transactions per sender, for crafting double spends.
    let mut history: Vec<Transaction> = Vec::new();

    for _ in 0..n_blocks {
        let k = state.next_height;
        let mut seqs: HashMap<Address, u64> = HashMap::new();
        let mut pool = Vec::new();
        let mut evidence = Vec::new();
        for _ in 0..rng.random_range(0..6) {
            let from_idx = rng.random_range(0..keys.len());
            let from = &keys[from_idx];
            let to = keys[rng.random_range(0..keys.len())].address;
            let seq = *seqs.entry(from.address).or_insert_with(|| state.next_seq(&from.address));
            let bal = state.balance(&from.address).0;
            nonce_ctr += 1;
            let nonce = super::nonce(nonce_ctr);
            let fee = Amount(rng.random_range(1..4));
            let amount = Amount(if bal > 8 { rng.random_range(1..bal / 2) } else { 1 });
            let kind = rng.random_range(0..100);
            let input = |amt: Amount| TxInput { address: from.address, amount: Amount(amt.0 + fee.0), seq };
            let tx = if kind < 45 {
                Transaction::unsigned(nonce, vec![input(amount)], vec![TxOutput { address: to, amount }], fee, TxVariant::Ordinary)
            } else if kind < 60 {
                let activation = k + rng.random_range(1..5);
                Transaction::unsigned(
                    nonce,
                    vec![input(amount)],
                    vec![TxOutput { address: to, amount }],
                    fee,
                    TxVariant::Future { activation },
                )
            } else if kind < 75 {
                // Often more than the sender holds now.
                let amount = Amount(amount.0 * rng.random_range(1..4) + 1);
                Transaction::unsigned(
                    nonce,
                    vec![input(amount)],
                    vec![TxOutput { address: to, amount }],
                    fee,
                    TxVariant::ConditionalFuture,
                )
            } else if kind < 88 {
                // Restitution of something this key received.
                let found = state.records.iter().find_map(|(id, r)| {
                    let got: u128 = r.outputs.iter().filter(|o| o.address == from.address).map(|o| o.amount.0).sum();
                    (!r.restitution && got > 0 && !state.restituted.contains(&(*id, from.address)))
                        .then_some((*id, r.sender, got))
                });
                let Some((original, sender, got)) = found else { continue };
                let back = Amount(rng.random_range(1..=got));
                let fee = Amount(rng.random_range(0..2));
                Transaction::unsigned(
                    nonce,
                    vec![TxInput { address: from.address, amount: Amount(back.0 + fee.0), seq }],
                    vec![TxOutput { address: sender, amount: back }],
                    fee,
                    TxVariant::Restitution { original },
                )
            } else if kind < 92 {
                // Miners (the first three keys) keep their keys.
                if from_idx < 3 {
                    continue;
                }
                Transaction::unsigned(
                    nonce,
                    vec![TxInput { address: from.address, amount: fee, seq }],
                    vec![],
                    fee,
                    TxVariant::KeyDestruction,
                )
            } else {
                // Conflicting copy of an earlier spend, proven in this block.
                if let Some(old) = history.get(rng.random_range(0..history.len().max(1))).cloned() {
                    if old.inputs.len() == 1 && old.inputs[0].address == from.address {
                        let mut twin = old.clone();
                        twin.nonce = nonce;
                        twin.signatures.clear();
                        evidence.push(DoubleSpendProof { first: old, second: twin.signed(&[from]) });
                    }
                }
                continue;
            };
            let tx = tx.signed(&[from]);
            *seqs.get_mut(&from.address).unwrap() += 1;
            pool.push(tx);
        }
        // Drop proofs that would be rejected (already penalized address or a
        // repeat within this block); miners are never penalized here.
        let mut probe = state.clone();
        let miner = &keys[rng.random_range(0..3)];
        evidence.retain(|p: &DoubleSpendProof| {
            let a = p.first.inputs[0].address;
            if probe.blocked.contains(&a) || keys[..3].iter().any(|m| m.address == a) {
                return false;
            }
            probe.blocked.insert(a);
            true
        });
        let mut base = state.clone();
        base.blocked = probe.blocked.clone();
        let txs = select_transactions(&base, params, &pool, 16);
        if state.destroyed.contains(&miner.address) || state.blocked.contains(&miner.address) {
            continue;
        }
        let block = assemble_block(&state, params, miner, txs, evidence, 1_000_000).unwrap();
        state = match state.apply_block(&block, params) {
            Ok(s) => s,
            Err(e) => panic!("seed {seed} block {k}: {e}"),
        };
        history.extend(block.txs.iter().filter(|t| t.variant == TxVariant::Ordinary).cloned());
        blocks.push(block);
        states.push(state.clone());
    }
    Trace { blocks, states, keys }
}
