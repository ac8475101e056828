mod common;

use bitguilder_core::consensus::*;
use bitguilder_core::crypto::KeyPair;
use bitguilder_core::ledger::*;
use bitguilder_core::numerics::Rat;
use common::{nonce, null_key, test_params};

fn grow(view: &ChainView, from: u64, miner: &KeyPair, n: usize, params: &ChainParams) -> Vec<Block> {
    let mut s = view.state_at(from);
    let mut out = Vec::new();
    for _ in 0..n {
        let b = assemble_block(&s, params, miner, vec![], vec![], 1 << 20).unwrap();
        s = s.apply_block(&b, params).unwrap();
        out.push(b);
    }
    out
}

fn base(n: usize) -> (ChainView, ChainParams) {
    let p = test_params();
    let mut v = ChainView::new(p.clone());
    let blocks = grow(&v, 0, &null_key(1), n, &p);
    for b in &blocks {
        v.extend(b).unwrap();
    }
    (v, p)
}

#[test]
fn appending_at_tip_extends() {
    let (v, p) = base(3);
    let next = grow(&v, 3, &null_key(2), 1, &p);
    assert_eq!(v.choose(&next, &ForkRule::default()), Ok(Decision::Extend));
}

#[test]
fn heavier_suffix_replaces_and_ties_keep() {
    let (mut v, p) = base(5);
    let rule = ForkRule::default();
    let same = grow(&v, 3, &null_key(2), 2, &p);
    assert_eq!(v.choose(&same, &rule), Ok(Decision::Keep));
    let heavier = grow(&v, 3, &null_key(2), 3, &p);
    assert_eq!(v.adopt(&heavier, &rule), Ok(Decision::Replace { depth: 2 }));
    assert_eq!(v.len(), 6);
    assert_eq!(v.block(5).unwrap().step.d, null_key(2).address);
    assert_eq!(v.state(), &v.state_at(6));
    assert_eq!(replay(v.blocks(), &p).unwrap().state, *v.state());
}

#[test]
fn difficulty_comparison_uses_epsilon() {
    // One block of difficulty 10 against one of difficulty 8.
    let mut p8 = test_params();
    p8.difficulty = 8;
    let mut v = ChainView::new(p8.clone());
    for b in grow(&v, 0, &null_key(1), 2, &p8) {
        v.extend(&b).unwrap();
    }
    // A miner may solve a harder puzzle than the chain minimum.
    let mut p10 = p8.clone();
    p10.difficulty = 10;
    let s = v.state_at(1);
    let b = assemble_block(&s, &p10, &null_key(2), vec![], vec![], 1 << 20).unwrap();
    let rule = ForkRule::default();
    assert_eq!(v.choose(&[b.clone()], &rule), Ok(Decision::Replace { depth: 1 }));
    let strict = ForkRule { epsilon: Rat::new(1, 4), ..rule.clone() };
    assert_eq!(v.choose(&[b], &strict), Ok(Decision::Keep));
}

#[test]
fn checkpoint_freezes_deep_blocks() {
    let (v, p) = base(8);
    let rule = ForkRule { checkpoint: Some(3), ..ForkRule::default() };
    let deep = grow(&v, 4, &null_key(2), 6, &p);
    assert_eq!(v.choose(&deep, &rule), Err(ChooseError::BelowCheckpoint { depth: 4, checkpoint: 3 }));
    let shallow = grow(&v, 6, &null_key(2), 3, &p);
    assert_eq!(v.choose(&shallow, &rule), Ok(Decision::Replace { depth: 2 }));
    let off = ForkRule { checkpoint: None, ..ForkRule::default() };
    assert_eq!(v.choose(&deep, &off), Ok(Decision::Replace { depth: 4 }));
}

#[test]
fn disconnected_and_invalid_candidates() {
    let (v, p) = base(3);
    let far = grow(&v, 3, &null_key(2), 2, &p);
    assert_eq!(v.choose(&far[1..], &ForkRule::default()), Err(ChooseError::Disconnected));
    let mut bad = far.clone();
    bad[0].step.g = Amount(9);
    assert!(matches!(v.choose(&bad, &ForkRule::default()), Err(ChooseError::InvalidCandidate { .. })));
    assert_eq!(v.choose(&[], &ForkRule::default()), Err(ChooseError::Empty));
}

#[test]
fn confirmations_count_blocks_to_tip() {
    let p = test_params();
    let m = null_key(1);
    let mut v = ChainView::new(p.clone());
    v.extend(&genesis_block(&p, &m, 1 << 20).unwrap()).unwrap();
    let tx = Transaction::transfer(&m, 0, nonce(1), null_key(2).address, Amount(5), Amount(1));
    let b = assemble_block(v.state(), &p, &m, vec![tx.clone()], vec![], 1 << 20).unwrap();
    v.extend(&b).unwrap();
    assert_eq!(v.confirmations(&tx.id()), 1);
    for b in grow(&v, 2, &m, 4, &p) {
        v.extend(&b).unwrap();
    }
    assert_eq!(v.confirmations(&tx.id()), 5);
    assert_eq!(v.confirmations(&TxId([0; 32])), 0);
}

#[test]
fn reorg_drops_transactions_of_replaced_blocks() {
    let p = test_params();
    let m = null_key(1);
    let mut v = ChainView::new(p.clone());
    v.extend(&genesis_block(&p, &m, 1 << 20).unwrap()).unwrap();
    let tx = Transaction::transfer(&m, 0, nonce(1), null_key(2).address, Amount(5), Amount(1));
    let b = assemble_block(v.state(), &p, &m, vec![tx.clone()], vec![], 1 << 20).unwrap();
    v.extend(&b).unwrap();
    let alt = grow(&v, 1, &null_key(3), 2, &p);
    v.adopt(&alt, &ForkRule::default()).unwrap();
    assert_eq!(v.confirmations(&tx.id()), 0);
    assert_eq!(v.state().balance(&null_key(2).address), Amount::ZERO);
}

#[test]
fn long_reorgs_use_snapshots_consistently() {
    let (mut v, p) = base(70);
    let alt = grow(&v, 37, &null_key(2), 40, &p);
    assert_eq!(v.adopt(&alt, &ForkRule::default()), Ok(Decision::Replace { depth: 33 }));
    for k in [0, 16, 37, 50, 77] {
        assert_eq!(v.state_at(k), replay(&v.blocks()[..k as usize], &p).map(|r| r.state).unwrap_or_default());
    }
}

#[test]
fn fork_report() {
    let (v1, p) = base(4);
    assert!(detect_forks(&[&v1, &v1.clone()]).is_empty());
    let mut v2 = v1.clone();
    v2.adopt(&grow(&v1, 2, &null_key(2), 3, &p), &ForkRule::default()).unwrap();
    let r = detect_forks(&[&v1, &v2, &v1]);
    assert_eq!(r.tips.len(), 2);
    assert_eq!(r.common_ancestor, Some(1));
    let parts: Vec<_> = r.tips.iter().map(|t| t.participants.clone()).collect();
    assert!(parts.contains(&vec![0, 2]) && parts.contains(&vec![1]));
    let mut v3 = v1.clone();
    v3.adopt(&v2.blocks()[2..], &ForkRule::default()).unwrap();
    assert!(detect_forks(&[&v3, &v2]).is_empty());
}
