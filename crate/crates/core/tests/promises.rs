use std::collections::BTreeSet;

use bitguilder_core::crypto::Address;
use bitguilder_core::ledger::{Amount, TxId};
use bitguilder_core::numerics::Rat;
use bitguilder_core::promises::*;
use proptest::prelude::*;

fn t(n: i64) -> Rat {
    Rat::from_integer(n)
}

fn population() -> Vec<String> {
    POPULATION.iter().map(|s| s.to_string()).collect()
}

fn addr(label: &str) -> Address {
    Address::from_label(label)
}

fn transfer_obs(time: i64, id: u8, from: Address, to: Address, amount: u128, conf: u64) -> Observation {
    Observation::Transfer {
        time: t(time),
        tx: TxId([id; 32]),
        from,
        to,
        amount: Amount(amount),
        confirmations: conf,
        sender: None,
    }
}

#[test]
fn scope_of_one_is_private() {
    let mut reg = Registry::new(population(), 1);
    let p = agents(&["P"]);
    let id = reg.declare(promise("P", &p, &p, Body::SatisfiesCondition { condition: "c".into() })).unwrap();
    assert_eq!(reg.visible_to("P"), BTreeSet::from([id]));
    for other in ["Q", "R", "S", "T", "U"] {
        assert!(reg.visible_to(other).is_empty());
    }
    assert_eq!(reg.status(id), Status::Declared);
}

#[test]
fn promiser_outside_scope_rejected() {
    let mut reg = Registry::new(population(), 1);
    let q = agents(&["Q"]);
    let err = reg.declare(promise("P", &q, &q, Body::SatisfiesCondition { condition: "c".into() })).unwrap_err();
    assert!(matches!(err, PromiseError::MalformedScope(_)));
    let err = reg
        .declare(promise("P", &agents(&["Z"]), &agents(&["P"]), Body::SatisfiesCondition { condition: "c".into() }))
        .unwrap_err();
    assert!(matches!(err, PromiseError::MalformedScope(_)));
}

#[test]
fn malformed_bodies_rejected() {
    let mut reg = Registry::new(population(), 1);
    let p = agents(&["P"]);
    let zero = Body::ProvideService { service: "s".into(), capacity: 0, condition: "c".into(), price: Amount(1) };
    assert!(matches!(reg.declare(promise("P", &p, &p, zero)), Err(PromiseError::MalformedBody(_))));
    let trig = Trigger::TransferReceived { amount: Amount(1), from: None, to: None };
    let nested = Body::Conditional {
        trigger: trig.clone(),
        then: Box::new(Body::Conditional { trigger: trig, then: Box::new(Body::SatisfiesCondition { condition: "c".into() }) }),
    };
    assert!(matches!(reg.declare(promise("P", &p, &p, nested)), Err(PromiseError::MalformedBody(_))));
}

#[test]
fn six_promises_visible_as_declared() {
    let mut reg = Registry::new(population(), 1);
    let ids = declare_appendix(&mut reg, AppendixVariant::Base, addr("pk1"), addr("pk2"), Amount(5), t(100));
    assert_eq!(ids.len(), 6);
    let group: BTreeSet<usize> = [ids[0], ids[1], ids[2], ids[5]].into();
    for g in ["R", "S"] {
        assert_eq!(reg.visible_to(g), group, "{g}");
    }
    let mut pq_sees = group.clone();
    pq_sees.extend([ids[3], ids[4]]);
    assert_eq!(reg.visible_to("P"), pq_sees);
    assert_eq!(reg.visible_to("Q"), pq_sees);
    assert!(reg.visible_to("T").is_empty() && reg.visible_to("U").is_empty());
    assert!(ids.iter().all(|&i| reg.status(i) == Status::Declared));
}

#[test]
fn transfer_counts_only_at_depth() {
    let (a, b) = (addr("a"), addr("b"));
    let mut reg = Registry::new(population(), 3);
    let q = agents(&["Q"]);
    let id = reg.declare(promise("Q", &q, &q, Body::Transfer { amount: Amount(10), from: Some(a), to: b, deadline: t(50) })).unwrap();
    reg.observe(&[transfer_obs(5, 1, a, b, 10, 2)]);
    assert_eq!(reg.status(id), Status::Declared);
    let changes = reg.observe(&[transfer_obs(6, 1, a, b, 10, 3)]);
    assert_eq!(changes.len(), 1);
    assert_eq!(reg.status(id), Status::Satisfied);
    assert!(reg.status_json_lines().contains("\"satisfied\""));
}

#[test]
fn deadline_lapses_without_penalty() {
    let (a, b) = (addr("a"), addr("b"));
    let mut reg = Registry::new(population(), 1);
    let q = agents(&["Q"]);
    let id = reg.declare(promise("Q", &q, &q, Body::Transfer { amount: Amount(10), from: Some(a), to: b, deadline: t(5) })).unwrap();
    reg.observe(&[Observation::Tick { time: t(6) }]);
    assert_eq!(reg.status(id), Status::ExpectationLapsed);
    assert_eq!(reg.status(id).label(), "expectation-lapsed (not kept)");
    // A late payment does not revive it.
    reg.observe(&[transfer_obs(7, 1, a, b, 10, 5)]);
    assert_eq!(reg.status(id), Status::ExpectationLapsed);
}

#[test]
fn capacity_one_second_claimant_unserved() {
    let mut reg = Registry::new(population(), 1);
    let all = reg.population().clone();
    reg.set_attribute("Q", "c", true);
    reg.set_attribute("R", "c", true);
    reg.declare(promise("P", &all, &all, Body::ProvideService { service: "s".into(), capacity: 1, condition: "c".into(), price: Amount(1) }))
        .unwrap();
    let req = |time, who: &str| Observation::ServiceRequest { time: t(time), service: "s".into(), requester: who.into() };
    reg.observe(&[req(1, "Q"), req(2, "R")]);
    assert_eq!(reg.entry(0).allocated, vec!["Q".to_string()]);
    assert!(matches!(&reg.flags[..], [Flag::Unserved { requester, .. }] if requester == "R"));
}

#[test]
fn failing_condition_unserved() {
    let mut reg = Registry::new(population(), 1);
    let all = reg.population().clone();
    reg.declare(promise("P", &all, &all, Body::ProvideService { service: "s".into(), capacity: 5, condition: "c".into(), price: Amount(1) }))
        .unwrap();
    reg.observe(&[Observation::ServiceRequest { time: t(1), service: "s".into(), requester: "T".into() }]);
    assert!(reg.entry(0).allocated.is_empty());
    assert_eq!(reg.flags.len(), 1);
}

#[test]
fn serve_in_order_is_fifo() {
    let mut reg = Registry::new(population(), 1);
    let all = reg.population().clone();
    for a in ["Q", "R"] {
        reg.set_attribute(a, "c", true);
    }
    reg.declare(promise("P", &all, &all, Body::ProvideService { service: "s".into(), capacity: 5, condition: "c".into(), price: Amount(1) }))
        .unwrap();
    let order = reg.declare(promise("Q", &all, &all, Body::ServeInOrder { service: "s".into() })).unwrap();
    let req = |time, who: &str| Observation::ServiceRequest { time: t(time), service: "s".into(), requester: who.into() };
    let deliver = |time, who: &str| Observation::ServiceDelivered { time: t(time), service: "s".into(), provider: "P".into(), recipient: who.into() };
    let mut jumped = reg.clone();
    reg.observe(&[req(1, "Q"), req(2, "R"), deliver(3, "Q")]);
    assert_eq!(reg.status(order), Status::Satisfied);
    jumped.observe(&[req(1, "Q"), req(2, "R"), deliver(3, "R")]);
    assert_eq!(jumped.status(order), Status::ExpectationLapsed);
}

#[test]
fn conditional_arms_on_trigger() {
    let (pay, shop) = (addr("pay"), addr("shop"));
    let mut reg = Registry::new(population(), 1);
    let all = reg.population().clone();
    reg.set_attribute("R", "c", true);
    let then = Box::new(Body::ProvideService { service: "s".into(), capacity: 1, condition: "c".into(), price: Amount(3) });
    let trigger = Trigger::TransferReceived { amount: Amount(3), from: None, to: Some(shop) };
    let id = reg.declare(promise("P", &all, &all, Body::Conditional { trigger, then })).unwrap();
    let deliver = Observation::ServiceDelivered { time: t(2), service: "s".into(), provider: "P".into(), recipient: "R".into() };
    reg.observe(&[deliver.clone()]);
    assert_eq!(reg.status(id), Status::Declared, "not armed yet");
    let mut paid = transfer_obs(3, 9, pay, shop, 3, 1);
    if let Observation::Transfer { sender, .. } = &mut paid {
        *sender = Some("R".into());
    }
    reg.observe(&[paid]);
    assert_eq!(reg.entry(id).armed, Some(Some("R".to_string())));
    reg.observe(&[Observation::ServiceDelivered { time: t(4), service: "s".into(), provider: "P".into(), recipient: "R".into() }]);
    assert_eq!(reg.status(id), Status::Satisfied);
    assert!(reg.flags.is_empty(), "the trigger names the address as expecting coins");
}

#[test]
fn unexpected_incoming_flagged() {
    let mut reg = Registry::new(population(), 1);
    reg.observe(&[transfer_obs(1, 1, addr("x"), addr("y"), 5, 1)]);
    assert!(matches!(reg.flags[..], [Flag::UnexpectedIncoming { .. }]));
}

#[test]
fn publishes_outgoing_lapses_on_unannounced_spend() {
    let a = addr("a");
    let mut reg = Registry::new(population(), 1);
    let all = reg.population().clone();
    let id = reg.declare(promise("P", &all, &all, Body::PublishesOutgoing { address: a })).unwrap();
    reg.observe(&[Observation::Announced { time: t(1), tx: TxId([1; 32]) }, transfer_obs(2, 1, a, addr("b"), 1, 1)]);
    assert_eq!(reg.status(id), Status::Declared);
    reg.observe(&[transfer_obs(3, 2, a, addr("b"), 1, 1)]);
    assert_eq!(reg.status(id), Status::ExpectationLapsed);
}

#[test]
fn anonymity_without_links_is_population() {
    let reg = Registry::new(population(), 1);
    let all: BTreeSet<String> = population().into_iter().collect();
    assert_eq!(reg.anonymity_set(&addr("k"), "R"), all);
}

#[test]
fn control_claim_is_singleton() {
    let mut reg = Registry::new(population(), 1);
    let all = reg.population().clone();
    let k = addr("k");
    reg.declare(promise("T", &all, &all, Body::ControlsAddress { address: k })).unwrap();
    assert_eq!(reg.anonymity_set(&k, "U"), agents(&["T"]));
}

#[test]
fn appendix_base_end_state() {
    let r = run_appendix_scenario(AppendixVariant::Base, 2);
    assert!(r.statuses.iter().all(|(_, s)| s == "satisfied"), "{:?}", r.statuses);
    assert!(r.service_delivered && r.gamma_verified);
    assert!(r.confirmations >= 2);
    let g = agents(&GROUP);
    for m in &g {
        let expect = if m == "P" || m == "Q" { agents(&["Q"]) } else { g.clone() };
        assert_eq!(r.pk2_anonymity[m], expect, "observer {m}");
        assert_eq!(r.pk1_anonymity[m].intersection(&g).count(), r.pk1_anonymity[m].len());
    }
    let a = agents(&POPULATION);
    assert_eq!(r.pk2_anonymity["T"], a);
    assert_eq!(r.pk1_anonymity["R"], g);
    assert!(r.flags.is_empty(), "{:?}", r.flags);
    assert!(r.balances_untouched);
}

#[test]
fn appendix_alternatives() {
    let a = agents(&POPULATION);
    let g = agents(&GROUP);
    let expect = [
        (AppendixVariant::Base, g.clone()),
        (AppendixVariant::Alt1, agents(&["Q"])),
        (AppendixVariant::Alt2, a.clone()),
        (AppendixVariant::Alt3, a.clone()),
    ];
    let base = run_appendix_scenario(AppendixVariant::Base, 1);
    for (v, set) in expect {
        let r = run_appendix_scenario(v, 1);
        assert_eq!(r.pk2_anonymity["R"], set, "{v}");
        assert!(r.service_delivered, "{v}");
        // Only the final promise differs; visibility is unchanged.
        assert_eq!(r.visibility, base.visibility);
        assert_eq!(r.statuses[..5], base.statuses[..5]);
    }
}

#[test]
fn appendix_replays_identically() {
    for v in AppendixVariant::ALL {
        assert_eq!(run_appendix_scenario(v, 2), run_appendix_scenario(v, 2));
    }
}

#[test]
fn promise_loads_from_toml() {
    let text = format!(
        "promiser = \"P\"\npromisees = [\"Q\"]\nscope = [\"P\", \"Q\"]\n[body]\nkind = \"accepts-transfers\"\naddress = \"{}\"\n",
        addr("k").to_hex()
    );
    let p: Promise = toml::from_str(&text).unwrap();
    assert_eq!(p.body, Body::AcceptsTransfers { address: addr("k") });
    let mut reg = Registry::new(population(), 1);
    assert!(reg.declare(p).is_ok());
}

fn linking_body(kind: u8, who: u8, addr_ix: u8) -> Body {
    let address = addr(&format!("k{}", addr_ix % 3));
    let _ = who;
    match kind % 4 {
        0 => Body::ControlsAddress { address },
        1 => Body::AcceptsTransfers { address },
        2 => Body::Transfer { amount: Amount(1), from: Some(address), to: addr("sink"), deadline: t(10) },
        _ => Body::Conditional {
            trigger: Trigger::TransferReceived { amount: Amount(1), from: Some(address), to: None },
            then: Box::new(Body::SatisfiesCondition { condition: "c".into() }),
        },
    }
}

fn pick(pop: &[String], mask: u8) -> BTreeSet<String> {
    pop.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, a)| a.clone()).collect()
}

proptest! {
    #[test]
    fn anonymity_is_antitone(decls in prop::collection::vec((0u8..6, 1u8..64, 1u8..64, 0u8..4, 0u8..3), 0..12)) {
        let pop = population();
        let mut reg = Registry::new(pop.clone(), 1);
        let mut prev: Vec<Vec<BTreeSet<String>>> = (0..3)
            .map(|k| pop.iter().map(|o| reg.anonymity_set(&addr(&format!("k{k}")), o)).collect())
            .collect();
        for (who, promisees, scope, kind, a) in decls {
            let promiser = pop[who as usize].clone();
            let mut scope = pick(&pop, scope);
            scope.insert(promiser.clone());
            let p = promise(&promiser, &pick(&pop, promisees), &scope, linking_body(kind, who, a));
            if reg.declare(p).is_err() { continue; }
            for k in 0..3 {
                for (i, o) in pop.iter().enumerate() {
                    let now = reg.anonymity_set(&addr(&format!("k{k}")), o);
                    prop_assert!(now.is_subset(&prev[k][i]));
                    prev[k][i] = now;
                }
            }
        }
    }

    #[test]
    fn status_is_monotone(events in prop::collection::vec((0u8..5, 0i64..30, 0u8..3, 0u64..4), 0..30)) {
        let (a, b) = (addr("a"), addr("b"));
        let mut reg = Registry::new(population(), 2);
        let all = reg.population().clone();
        reg.set_attribute("Q", "c", true);
        reg.declare(promise("Q", &all, &all, Body::Transfer { amount: Amount(5), from: Some(a), to: b, deadline: t(15) })).unwrap();
        reg.declare(promise("Q", &all, &all, Body::SatisfiesCondition { condition: "c".into() })).unwrap();
        reg.declare(promise("P", &all, &all, Body::ProvideService { service: "s".into(), capacity: 1, condition: "c".into(), price: Amount(1) })).unwrap();
        reg.declare(promise("P", &all, &all, Body::ServeInOrder { service: "s".into() })).unwrap();
        reg.declare(promise("P", &all, &all, Body::PublishesOutgoing { address: a })).unwrap();
        let mut sorted = events;
        sorted.sort_by_key(|e| e.1);
        let mut last: Vec<Status> = vec![Status::Declared; 5];
        for (kind, time, who, conf) in sorted {
            let agent = ["Q", "R", "T"][who as usize].to_string();
            let ev = match kind {
                0 => transfer_obs(time, who, a, b, 5, conf),
                1 => Observation::ConditionChecked { time: t(time), agent, condition: "c".into(), holds: who != 2 },
                2 => Observation::ServiceRequest { time: t(time), service: "s".into(), requester: agent },
                3 => Observation::ServiceDelivered { time: t(time), service: "s".into(), provider: "P".into(), recipient: agent },
                _ => Observation::Tick { time: t(time) },
            };
            reg.observe(&[ev]);
            for (i, prev) in last.iter_mut().enumerate() {
                let s = reg.status(i);
                if *prev != Status::Declared {
                    prop_assert_eq!(s, *prev);
                }
                *prev = s;
            }
        }
        for k in ["P", "Q", "R"] {
            prop_assert_eq!(reg.knowledge(k).unwrap().facts.len(), reg.knowledge("T").unwrap().facts.len());
        }
    }
}
