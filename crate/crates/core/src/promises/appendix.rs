//! The service-for-payment exchange between P and Q, with the four
//! versions of P's final promise.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::{agents, promise, Agent, Body, Flag, Observation, PromiseId, Registry, Trigger};
use crate::crypto::{Address, SignatureScheme};
use crate::ledger::{Amount, ChainParams, SoloChain, Transaction};
use crate::netsim::{TransferOrder, Wallet};
use crate::numerics::Rat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AppendixVariant {
    /// Promise to G: serve the sender of a payment from pk2.
    Base,
    /// Same terms, promised to Q alone but seen by G.
    Alt1,
    /// Promised to G; the paying account is left unnamed.
    Alt2,
    /// Promised to Q, seen by G; any payment, service to Q.
    Alt3,
}

impl AppendixVariant {
    pub const ALL: [AppendixVariant; 4] = [AppendixVariant::Base, AppendixVariant::Alt1, AppendixVariant::Alt2, AppendixVariant::Alt3];
}

impl fmt::Display for AppendixVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AppendixVariant::Base => "base",
            AppendixVariant::Alt1 => "alt1",
            AppendixVariant::Alt2 => "alt2",
            AppendixVariant::Alt3 => "alt3",
        };
        f.write_str(s)
    }
}

impl FromStr for AppendixVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        AppendixVariant::ALL.into_iter().find(|v| v.to_string() == s).ok_or_else(|| format!("unknown variant `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AppendixReport {
    pub variant: AppendixVariant,
    pub pk1: Address,
    pub pk2: Address,
    pub tx: String,
    pub confirmations: u64,
    /// `(id, status label)` for the six promises.
    pub statuses: Vec<(PromiseId, String)>,
    pub service_delivered: bool,
    pub gamma_verified: bool,
    /// Who could control pk2, per observer.
    pub pk2_anonymity: BTreeMap<Agent, BTreeSet<Agent>>,
    /// Who could control pk1, per observer.
    pub pk1_anonymity: BTreeMap<Agent, BTreeSet<Agent>>,
    pub visibility: BTreeMap<Agent, BTreeSet<PromiseId>>,
    pub flags: Vec<Flag>,
    /// Balances of the fixture chain before and after the promise engine
    /// saw the events.
    pub balances_untouched: bool,
}

pub const POPULATION: [&str; 6] = ["P", "Q", "R", "S", "T", "U"];
pub const GROUP: [&str; 4] = ["P", "Q", "R", "S"];
const SERVICE: &str = "s";
const GAMMA: &str = "gamma";

fn t(n: i64) -> Rat {
    Rat::from_integer(n)
}

/// Declares promises 1 to 5 and the chosen final promise, returning
/// the six ids.
pub fn declare_appendix(reg: &mut Registry, variant: AppendixVariant, pk1: Address, pk2: Address, price: Amount, deadline: Rat) -> Vec<PromiseId> {
    let g = reg.define_group("G", &GROUP);
    let p_only = agents(&["P"]);
    let q_only = agents(&["Q"]);
    // Addressed to P alone; the promiser is always part of its own audience.
    let p_and_q = agents(&["P", "Q"]);
    let mut decl = |pr| reg.declare(pr).expect("well-formed appendix promise");
    let mut ids = vec![
        decl(promise("P", &g, &g, Body::ProvideService { service: SERVICE.into(), capacity: 3, condition: GAMMA.into(), price })),
        decl(promise("Q", &g, &g, Body::ServeInOrder { service: SERVICE.into() })),
        decl(promise("Q", &g, &g, Body::AcceptsTransfers { address: pk1 })),
        decl(promise("Q", &p_only, &p_and_q, Body::SatisfiesCondition { condition: GAMMA.into() })),
        decl(promise("Q", &p_only, &p_and_q, Body::Transfer { amount: price, from: Some(pk2), to: pk1, deadline })),
    ];
    let service = Box::new(Body::ProvideService { service: SERVICE.into(), capacity: 1, condition: GAMMA.into(), price });
    let (promisees, from) = match variant {
        AppendixVariant::Base => (&g, Some(pk2)),
        AppendixVariant::Alt1 => (&q_only, Some(pk2)),
        AppendixVariant::Alt2 => (&g, None),
        AppendixVariant::Alt3 => (&q_only, None),
    };
    let trigger = Trigger::TransferReceived { amount: price, from, to: Some(pk1) };
    ids.push(decl(promise("P", promisees, &g, Body::Conditional { trigger, then: service })));
    ids
}

/// Runs the exchange on a local chain: Q pays from pk2 into pk1, P checks
/// γ and serves Q. Transfers count at `k_c` confirmations.
pub fn run_appendix_scenario(variant: AppendixVariant, k_c: u64) -> AppendixReport {
    let mut params = ChainParams::desk();
    params.signature = SignatureScheme::Ecdsa;
    let p_wallet = Wallet::for_name(params.signature, "P/pk1");
    let mut q_wallet = Wallet::for_name(params.signature, "Q/pk2");
    let (pk1, pk2) = (p_wallet.address(), q_wallet.address());
    let price = params.whole_units(5);
    let fee = params.min_fee;

    // pk2 is funded by mining one block to it.
    let mut chain = SoloChain::new(params.clone(), q_wallet.key().clone());
    chain.mine().expect("funding block");

    let mut reg = Registry::new(POPULATION.iter().map(|s| s.to_string()), k_c);
    reg.set_attribute("Q", GAMMA, true);
    let ids = declare_appendix(&mut reg, variant, pk1, pk2, price, t(100));

    let mut events = vec![Observation::ServiceRequest { time: t(1), service: SERVICE.into(), requester: "Q".into() }];

    let order = TransferOrder { to: pk1, amount: price, fee };
    let bytes = q_wallet.construct(chain.state(), &order, [7u8; 16]);
    let tx = Transaction::from_bytes(&bytes).expect("wallet emits canonical bytes");
    let txid = chain.submit(tx).expect("funded transfer");
    for _ in 0..k_c.max(1) {
        chain.mine().expect("mine");
    }
    let before: Vec<Amount> = [pk1, pk2, chain.miner()].iter().map(|a| chain.balance(a)).collect();
    let confirmations = chain.confirmations(&txid);
    events.push(Observation::Transfer {
        time: t(10),
        tx: txid,
        from: pk2,
        to: pk1,
        amount: price,
        confirmations,
        sender: Some("Q".into()),
    });
    events.push(Observation::ConditionChecked { time: t(11), agent: "Q".into(), condition: GAMMA.into(), holds: true });
    events.push(Observation::ServiceDelivered { time: t(12), service: SERVICE.into(), provider: "P".into(), recipient: "Q".into() });
    reg.observe(&events);
    let after: Vec<Amount> = [pk1, pk2, chain.miner()].iter().map(|a| chain.balance(a)).collect();

    let pop: Vec<Agent> = reg.population().iter().cloned().collect();
    let per_observer = |addr: &Address| pop.iter().map(|o| (o.clone(), reg.anonymity_set(addr, o))).collect();
    let status = |i: usize| reg.status(ids[i]);
    AppendixReport {
        variant,
        pk1,
        pk2,
        tx: txid.to_hex(),
        confirmations,
        statuses: ids.iter().map(|&id| (id, reg.status(id).label().to_string())).collect(),
        service_delivered: status(5) == super::Status::Satisfied,
        gamma_verified: status(3) == super::Status::Satisfied,
        pk2_anonymity: per_observer(&pk2),
        pk1_anonymity: per_observer(&pk1),
        visibility: pop.iter().map(|a| (a.clone(), reg.visible_to(a))).collect(),
        flags: reg.flags.clone(),
        balances_untouched: before == after,
    }
}
