use std::collections::BTreeMap;

use bitguilder_core::accounting::*;
use bitguilder_core::crypto::{Address, KeyPair, SignatureScheme};
use bitguilder_core::ledger::Amount;
use bitguilder_core::numerics::{Quantity, Rat};
use num_rational::BigRational;
use proptest::prelude::*;

const SCHEME: SignatureScheme = SignatureScheme::Ecdsa;

fn r(n: i64, d: i64) -> Rat {
    Rat::new(n, d)
}

fn q(s: &str) -> Quantity {
    s.parse().unwrap()
}

fn key(seed: u8) -> KeyPair {
    KeyPair::from_secret(SCHEME, [seed; 32]).unwrap()
}

fn holdings(items: &[(Address, i64)]) -> Holdings {
    items.iter().map(|(a, v)| (*a, Rat::from(*v))).collect()
}

#[test]
fn valuation_is_identity_in_bgua() {
    assert_eq!(valuation(Amount::ZERO, 8), q("0 BGUA"));
    assert_eq!(valuation(Amount(340_000_000), 8), Quantity::of(r(17, 5), BGUA));
    // Beyond any possible supply, and negative, are both fine.
    assert_eq!(valuation_units(&Rat::from(50_000_000i64)).value, Rat::from(50_000_000i64));
    assert_eq!(valuation_units(&r(-3, 2)).to_string(), "-3/2 BGUA");
}

#[test]
fn exclusive_plus_shared_half() {
    let (a, b) = (Address::from_label("a"), Address::from_label("b"));
    let h = holdings(&[(a, 10), (b, 6)]);
    let access = AccessRelation::from_pairs([("P", a), ("P", b), ("Q", b)]);
    assert_eq!(wealth1("P", &h, &access), q("13 BGUA"));
    assert_eq!(wealth1("Q", &h, &access), q("3 BGUA"));
    assert_eq!(wealth1("R", &h, &access), q("0 BGUA"));
}

#[test]
fn fully_shared_splits_evenly() {
    let addrs: Vec<Address> = (0..5).map(|i| Address::from_label(&format!("s{i}"))).collect();
    let h: Holdings = addrs.iter().enumerate().map(|(i, a)| (*a, Rat::from(7 * i as i64 + 1))).collect();
    let agents = ["A", "B", "C"];
    let access = AccessRelation::from_pairs(agents.iter().flat_map(|p| addrs.iter().map(move |a| (*p, *a))));
    let supply: Rat = h.values().cloned().sum();
    let mut total = Rat::zero();
    for p in agents {
        let w = wealth1(p, &h, &access);
        assert_eq!(w.value, &supply * &r(1, 3));
        total += &w.value;
    }
    assert_eq!(total, supply);
}

#[test]
fn taxation_is_one_percent() {
    let a = Address::from_label("a");
    let h = holdings(&[(a, 1000)]);
    let access = AccessRelation::from_pairs([("P", a)]);
    assert_eq!(taxation("P", &h, &access), q("10 FBGU"));
    assert_eq!(taxation("Z", &h, &access), q("0 FBGU"));
}

fn demonstrated(agent: &str, k: &KeyPair, t: i64) -> Vec<Assertion> {
    let ch = Challenge { address: k.address, nonce: t as u64, time: Rat::from(t) };
    vec![
        Assertion::Confirmed { agent: agent.into(), address: k.address, time: Rat::from(t) },
        Assertion::Demonstrated { agent: agent.into(), signature: ch.answer(k), challenge: ch },
    ]
}

#[test]
fn closure_rule_one() {
    let k = key(1);
    let rel = c_access_closure(&demonstrated("P", &k, 1), &Rat::from(5), SCHEME);
    assert!(rel.has("P", &k.address));
    assert_eq!(rel.provenance("P", &k.address), Some(&Provenance::Demonstrated));
    // Confirmation alone, or a demonstration after t, is not enough.
    let only = &demonstrated("P", &k, 1)[..1];
    assert!(c_access_closure(only, &Rat::from(5), SCHEME).is_empty());
    assert!(c_access_closure(&demonstrated("P", &k, 7), &Rat::from(5), SCHEME).is_empty());
}

#[test]
fn forged_demonstration_rejected() {
    let (k, other) = (key(1), key(2));
    let ch = Challenge { address: k.address, nonce: 1, time: Rat::one() };
    let raw = vec![
        Assertion::Confirmed { agent: "P".into(), address: k.address, time: Rat::one() },
        Assertion::Demonstrated { agent: "P".into(), signature: ch.answer(&other), challenge: ch },
    ];
    assert!(c_access_closure(&raw, &Rat::from(5), SCHEME).is_empty());
}

#[test]
fn closure_rule_two_chains() {
    let k = key(1);
    let mut raw = demonstrated("P", &k, 1);
    raw.push(Assertion::Shared { asserter: "Q".into(), with: "R".into(), address: k.address, time: Rat::from(2) });
    raw.push(Assertion::Shared { asserter: "P".into(), with: "Q".into(), address: k.address, time: Rat::from(3) });
    let rel = c_access_closure(&raw, &Rat::from(5), SCHEME);
    for a in ["P", "Q", "R"] {
        assert!(rel.has(a, &k.address), "{a}");
    }
    assert_eq!(rel.provenance("R", &k.address), Some(&Provenance::SharedAssertion { by: "Q".into() }));
}

#[test]
fn unconfirmed_asserter_confirms_nobody() {
    let k = key(1);
    let raw = vec![Assertion::Shared { asserter: "Q".into(), with: "R".into(), address: k.address, time: Rat::one() }];
    assert!(c_access_closure(&raw, &Rat::from(5), SCHEME).is_empty());
}

#[test]
fn wealth2_matches_wealth1_when_all_confirmed() {
    let (ka, kb) = (key(1), key(2));
    let h = holdings(&[(ka.address, 10), (kb.address, 6)]);
    let mut raw = demonstrated("P", &ka, 1);
    raw.extend(demonstrated("P", &kb, 1));
    raw.push(Assertion::Shared { asserter: "P".into(), with: "Q".into(), address: kb.address, time: Rat::from(2) });
    let t = Rat::from(5);
    let w2 = wealth2("P", &h, &raw, &t, SCHEME);
    assert_eq!(w2, q("13 FBGUA"));
    let plain = AccessRelation::from_pairs([("P", ka.address), ("P", kb.address), ("Q", kb.address)]);
    assert_eq!(w2.value, wealth1("P", &h, &plain).value);
    assert_eq!(wealth2("P", &h, &[], &t, SCHEME), q("0 FBGUA"));
}

#[test]
fn unconfirmed_sharer_leaves_bigger_share() {
    let kb = key(2);
    let h = holdings(&[(kb.address, 6)]);
    let mut raw = demonstrated("P", &kb, 1);
    // Q claims access but nobody confirmed says so.
    raw.push(Assertion::Confirmed { agent: "Q".into(), address: kb.address, time: Rat::one() });
    let t = Rat::from(5);
    assert_eq!(wealth2("P", &h, &raw, &t, SCHEME), q("6 FBGUA"));
    let claimed = AccessRelation::from_pairs([("P", kb.address), ("Q", kb.address)]);
    assert_eq!(wealth1("P", &h, &claimed), q("3 BGUA"));
}

#[test]
fn operating_case_boundary() {
    let c = operating_case(&q("5 BGU/U"), &q("5 BGU/U")).unwrap();
    assert!(c.passes);
    assert_eq!(c.productivity, Rat::one());
    let c = operating_case(&q("4 BGU/U"), &q("5 BGU/U")).unwrap();
    assert!(!c.passes);
    assert_eq!(c.productivity, r(4, 5));
    assert!(operating_case(&q("5 BGU/U"), &q("5 BGU")).is_err());
}

#[test]
fn replacement_case_boundary() {
    let rc = replacement_case(&q("10 U"), &q("3 BGU/U"), &q("5 BGU/U"), &q("30 BGU"), &q("50 BGU")).unwrap();
    assert!(rc.like_for_like && rc.upgrade);
    let rc = replacement_case(&q("10 U"), &q("3 BGU/U"), &q("5 BGU/U"), &q("31 BGU"), &q("52 BGU")).unwrap();
    assert!(!rc.like_for_like && !rc.upgrade);
    assert!(replacement_case(&q("10 U"), &q("3 BGU/U"), &q("5 NMC/U"), &q("30 BGU"), &q("50 BGU")).is_err());
    assert!(replacement_case(&q("10 U"), &q("3 BGU/U"), &q("5 BGU/U"), &q("30 BGU"), &q("50 EUR")).is_err());
}

#[test]
fn fifty_euro() {
    let ev = expected_value(&r(1, 100_000), &q("100000000000000 EUR"), &Rat::from(20_000_000i64));
    assert_eq!(ev.value, q("50 EUR"));
    assert!(!ev.zero_supply);
    let world = q("100000000000000 EUR");
    assert_eq!(expected_value(&Rat::zero(), &world, &Rat::from(7)).value, q("0 EUR"));
    assert_eq!(expected_value(&Rat::one(), &world, &Rat::from(4)).value, q("25000000000000 EUR"));
    let zero = expected_value(&Rat::one(), &world, &Rat::zero());
    assert!(zero.zero_supply && zero.value.value.is_zero());
}

#[test]
fn wealth_rows_as_csv() {
    let rows = vec![WealthRow::new("P", &Rat::from(3), &q("13/2 BGUA")), WealthRow::new("Q", &Rat::from(3), &q("0 FBGU"))];
    assert_eq!(wealth_csv(&rows), "agent,t,value,unit\nP,3,13/2,BGUA\nQ,3,0,FBGU\n");
}

#[test]
fn assertions_load_from_toml() {
    let text = format!(
        "[[a]]\nkind = \"shared\"\nasserter = \"P\"\nwith = \"Q\"\naddress = \"{}\"\ntime = \"3/2\"\n",
        Address::from_label("x").to_hex()
    );
    #[derive(serde::Deserialize)]
    struct File {
        a: Vec<Assertion>,
    }
    let f: File = toml::from_str(&text).unwrap();
    assert!(matches!(&f.a[0], Assertion::Shared { time, .. } if *time == r(3, 2)));
}

fn rel_from(mask: &[(u8, u8)]) -> (AccessRelation, Vec<Address>) {
    let addrs: Vec<Address> = (0..6).map(|i| Address::from_label(&format!("x{i}"))).collect();
    let names = ["A", "B", "C", "D"];
    let rel = AccessRelation::from_pairs(mask.iter().map(|(p, a)| (names[*p as usize % 4], addrs[*a as usize % 6])));
    (rel, addrs)
}

fn to_big(x: &Rat) -> BigRational {
    BigRational::new(x.numer().clone(), x.denom().clone())
}

proptest! {
    #[test]
    fn shares_sum_to_accessed_total(mask in prop::collection::vec((0u8..4, 0u8..6), 0..20), vals in prop::collection::vec(0i64..1_000_000, 6)) {
        let (rel, addrs) = rel_from(&mask);
        let h: Holdings = addrs.iter().zip(&vals).map(|(a, v)| (*a, r(*v, 7))).collect();
        let total: Rat = ["A", "B", "C", "D"].iter().map(|p| wealth1(p, &h, &rel).value).sum();
        let accessed: Rat = addrs.iter().filter(|a| rel.holders(a) > 0).map(|a| h[a].clone()).sum();
        prop_assert_eq!(&total, &accessed);
        // Independent check in num-rational.
        let mut oracle = BigRational::from_integer(0.into());
        for p in ["A", "B", "C", "D"] {
            for a in rel.addresses_of(p) {
                oracle += to_big(&h[&a]) / BigRational::from_integer((rel.holders(&a) as i64).into());
            }
        }
        prop_assert_eq!(to_big(&total), oracle);
        for p in ["A", "B", "C", "D"] {
            let w = wealth1(p, &h, &rel);
            prop_assert_eq!(taxation(p, &h, &rel).value, &w.value * &r(1, 100));
        }
    }

    #[test]
    fn closure_monotone_and_idempotent(shares in prop::collection::vec((0u8..4, 0u8..4, 0u8..3, 0i64..6), 0..12), demos in prop::collection::vec((0u8..4, 0u8..3), 0..4), extra in 0usize..12) {
        let names = ["A", "B", "C", "D"];
        let keys: Vec<KeyPair> = (1..=3).map(key).collect();
        let mut raw: Vec<Assertion> = demos.iter().flat_map(|(p, k)| demonstrated(names[*p as usize], &keys[*k as usize], 1)).collect();
        raw.extend(shares.iter().map(|(x, y, k, t)| Assertion::Shared {
            asserter: names[*x as usize].into(),
            with: names[*y as usize].into(),
            address: keys[*k as usize].address,
            time: Rat::from(*t),
        }));
        let t = Rat::from(4);
        let cut = extra.min(raw.len());
        let small = c_access_closure(&raw[..cut], &t, SCHEME);
        let full = c_access_closure(&raw, &t, SCHEME);
        prop_assert!(small.is_subset(&full));
        let again = c_access_from(full.clone(), &raw, &t, SCHEME);
        prop_assert_eq!(again, full);
    }
}

#[test]
fn holdings_from_ledger_state() {
    let mut st = bitguilder_core::ledger::LedgerState::new();
    let a = Address::from_label("a");
    st.balances.insert(a, Amount(250_000_000));
    let h = holdings_of(&st, 8);
    assert_eq!(h, BTreeMap::from([(a, r(5, 2))]));
}
