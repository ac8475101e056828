//! Promises with scoped visibility, tracked against observed ledger events.
//!
//! A promise only shapes what other agents expect. Nothing here can move
//! coins or force the promised act; statuses change only by observation.

mod appendix;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::Address;
use crate::ledger::{Amount, TxId};
use crate::numerics::Rat;

pub use appendix::{declare_appendix, run_appendix_scenario, AppendixReport, AppendixVariant, GROUP, POPULATION};

pub type Agent = String;
pub type PromiseId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Trigger {
    /// A confirmed transfer of at least `amount`; unset addresses match any.
    TransferReceived { amount: Amount, from: Option<Address>, to: Option<Address> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Body {
    /// Pay `amount` to `to` before `deadline`.
    Transfer { amount: Amount, from: Option<Address>, to: Address, deadline: Rat },
    /// Serve at most `capacity` agents satisfying `condition`, for `price`.
    ProvideService { service: String, capacity: u32, condition: String, price: Amount },
    /// Requests for `service` are served first come, first served.
    ServeInOrder { service: String },
    AcceptsTransfers { address: Address },
    SatisfiesCondition { condition: String },
    /// The promiser says it controls `address`.
    ControlsAddress { address: Address },
    /// Every outgoing transfer from `address` is announced beforehand.
    PublishesOutgoing { address: Address },
    /// `then` becomes due once `trigger` is observed. A service then goes
    /// to the sender of the triggering transfer.
    Conditional { trigger: Trigger, then: Box<Body> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Promise {
    pub promiser: Agent,
    pub promisees: BTreeSet<Agent>,
    /// Audience; always includes the promiser.
    pub scope: BTreeSet<Agent>,
    pub body: Body,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Declared,
    Satisfied,
    /// The expected act did not happen, or was contradicted. No sanction
    /// follows.
    ExpectationLapsed,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Declared => "declared",
            Status::Satisfied => "satisfied",
            Status::ExpectationLapsed => "expectation-lapsed (not kept)",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromiseError {
    #[error("malformed scope: {0}")]
    MalformedScope(String),
    #[error("malformed body: {0}")]
    MalformedBody(String),
}

/// Something an agent can watch happen.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Observation {
    /// A transfer seen at `confirmations` blocks deep; `sender` is the
    /// agent behind `from` when the scenario knows it.
    Transfer {
        time: Rat,
        tx: TxId,
        from: Address,
        to: Address,
        amount: Amount,
        confirmations: u64,
        sender: Option<Agent>,
    },
    /// A transaction announced before being made.
    Announced { time: Rat, tx: TxId },
    ServiceRequest { time: Rat, service: String, requester: Agent },
    ServiceDelivered { time: Rat, service: String, provider: Agent, recipient: Agent },
    ConditionChecked { time: Rat, agent: Agent, condition: String, holds: bool },
    Tick { time: Rat },
}

impl Observation {
    pub fn time(&self) -> &Rat {
        match self {
            Observation::Transfer { time, .. }
            | Observation::Announced { time, .. }
            | Observation::ServiceRequest { time, .. }
            | Observation::ServiceDelivered { time, .. }
            | Observation::ConditionChecked { time, .. }
            | Observation::Tick { time } => time,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StatusChange {
    pub time: Rat,
    pub promise: PromiseId,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Flag {
    /// Coins arrived at an address nobody said would take them.
    UnexpectedIncoming { time: Rat, tx: TxId, to: Address },
    /// A request beyond the promised capacity, or from an agent failing the
    /// condition.
    Unserved { time: Rat, service: String, requester: Agent },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Entry {
    pub promise: Promise,
    pub status: Status,
    /// For conditionals: the trigger fired, with the triggering sender.
    pub armed: Option<Option<Agent>>,
    /// Agents granted a service slot.
    pub allocated: Vec<Agent>,
}

/// What one agent has seen: promises in its scope and observed facts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct KnowledgeBase {
    pub visible: BTreeSet<PromiseId>,
    pub facts: Vec<Observation>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Registry {
    population: BTreeSet<Agent>,
    groups: BTreeMap<String, BTreeSet<Agent>>,
    entries: Vec<Entry>,
    knowledge: BTreeMap<Agent, KnowledgeBase>,
    /// Condition values per agent, supplied by the scenario.
    attributes: BTreeMap<(Agent, String), bool>,
    /// Depth at which a transfer counts.
    pub k_c: u64,
    queues: BTreeMap<String, VecDeque<Agent>>,
    announced: BTreeSet<TxId>,
    counted: BTreeSet<TxId>,
    pub flags: Vec<Flag>,
    pub log: Vec<StatusChange>,
}

impl Registry {
    pub fn new<I: IntoIterator<Item = Agent>>(population: I, k_c: u64) -> Registry {
        let population: BTreeSet<Agent> = population.into_iter().collect();
        Registry {
            knowledge: population.iter().map(|a| (a.clone(), KnowledgeBase::default())).collect(),
            population,
            groups: BTreeMap::new(),
            entries: Vec::new(),
            attributes: BTreeMap::new(),
            k_c,
            queues: BTreeMap::new(),
            announced: BTreeSet::new(),
            counted: BTreeSet::new(),
            flags: Vec::new(),
            log: Vec::new(),
        }
    }

    pub fn population(&self) -> &BTreeSet<Agent> {
        &self.population
    }

    pub fn define_group(&mut self, name: &str, members: &[&str]) -> BTreeSet<Agent> {
        let set: BTreeSet<Agent> = members.iter().map(|m| m.to_string()).collect();
        self.groups.insert(name.into(), set.clone());
        set
    }

    pub fn group(&self, name: &str) -> Option<&BTreeSet<Agent>> {
        self.groups.get(name)
    }

    pub fn set_attribute(&mut self, agent: &str, condition: &str, holds: bool) {
        self.attributes.insert((agent.into(), condition.into()), holds);
    }

    fn attribute(&self, agent: &str, condition: &str) -> bool {
        self.attributes.get(&(agent.to_string(), condition.to_string())).copied().unwrap_or(false)
    }

    pub fn entry(&self, id: PromiseId) -> &Entry {
        &self.entries[id]
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn status(&self, id: PromiseId) -> Status {
        self.entries[id].status
    }

    pub fn knowledge(&self, agent: &str) -> Option<&KnowledgeBase> {
        self.knowledge.get(agent)
    }

    pub fn visible_to(&self, agent: &str) -> BTreeSet<PromiseId> {
        self.knowledge.get(agent).map(|k| k.visible.clone()).unwrap_or_default()
    }

    /// Agents able to see promise `id`.
    pub fn audience(&self, id: PromiseId) -> BTreeSet<Agent> {
        self.entries[id].promise.scope.clone()
    }

    pub fn declare(&mut self, p: Promise) -> Result<PromiseId, PromiseError> {
        if !self.population.contains(&p.promiser) {
            return Err(PromiseError::MalformedScope(format!("unknown promiser `{}`", p.promiser)));
        }
        if !p.scope.contains(&p.promiser) {
            return Err(PromiseError::MalformedScope("promiser outside the scope".into()));
        }
        if let Some(a) = p.scope.iter().chain(&p.promisees).find(|a| !self.population.contains(*a)) {
            return Err(PromiseError::MalformedScope(format!("unknown agent `{a}`")));
        }
        if p.promisees.is_empty() {
            return Err(PromiseError::MalformedScope("no promisee".into()));
        }
        check_body(&p.body)?;
        let id = self.entries.len();
        for a in &p.scope {
            self.knowledge.get_mut(a).expect("checked member").visible.insert(id);
        }
        self.entries.push(Entry { promise: p, status: Status::Declared, armed: None, allocated: Vec::new() });
        Ok(id)
    }

    fn set_status(&mut self, id: PromiseId, status: Status, time: &Rat) {
        if self.entries[id].status == Status::Declared && status != Status::Declared {
            self.entries[id].status = status;
            self.log.push(StatusChange { time: time.clone(), promise: id, status });
        }
    }

    /// Feeds events in time order and returns the status changes they
    /// caused. Every agent records every event as a fact.
    pub fn observe(&mut self, events: &[Observation]) -> Vec<StatusChange> {
        let start = self.log.len();
        for ev in events {
            for k in self.knowledge.values_mut() {
                k.facts.push(ev.clone());
            }
            self.lapse_deadlines(ev.time());
            match ev {
                Observation::Transfer { time, tx, from, to, amount, confirmations, sender } => {
                    if *confirmations < self.k_c.max(1) || !self.counted.insert(*tx) {
                        continue;
                    }
                    self.transfer(time, tx, from, to, *amount, sender.clone());
                }
                Observation::Announced { tx, .. } => {
                    self.announced.insert(*tx);
                }
                Observation::ServiceRequest { time, service, requester } => self.request(time, service, requester),
                Observation::ServiceDelivered { time, service, provider, recipient } => {
                    self.delivered(time, service, provider, recipient)
                }
                Observation::ConditionChecked { time, agent, condition, holds } => {
                    for id in 0..self.entries.len() {
                        let e = &self.entries[id];
                        if let Body::SatisfiesCondition { condition: c } = &e.promise.body {
                            if c == condition && &e.promise.promiser == agent {
                                let s = if *holds { Status::Satisfied } else { Status::ExpectationLapsed };
                                self.set_status(id, s, time);
                            }
                        }
                    }
                }
                Observation::Tick { .. } => {}
            }
        }
        self.log[start..].to_vec()
    }

    fn lapse_deadlines(&mut self, now: &Rat) {
        for id in 0..self.entries.len() {
            if let Body::Transfer { deadline, .. } = &self.entries[id].promise.body {
                if now > deadline {
                    self.set_status(id, Status::ExpectationLapsed, now);
                }
            }
        }
    }

    fn transfer(&mut self, time: &Rat, tx: &TxId, from: &Address, to: &Address, amount: Amount, sender: Option<Agent>) {
        let mut expected = false;
        for id in 0..self.entries.len() {
            let e = &self.entries[id];
            match &e.promise.body {
                Body::Transfer { amount: a, from: f, to: t, deadline } => {
                    if t == to && f.is_none_or(|f| &f == from) && amount >= *a && time <= deadline {
                        expected = true;
                        self.set_status(id, Status::Satisfied, time);
                    }
                }
                Body::AcceptsTransfers { address } if address == to => {
                    expected = true;
                    self.set_status(id, Status::Satisfied, time);
                }
                Body::PublishesOutgoing { address } if address == from && !self.announced.contains(tx) => {
                    self.set_status(id, Status::ExpectationLapsed, time);
                }
                Body::Conditional { trigger: Trigger::TransferReceived { amount: a, from: f, to: t }, .. } => {
                    let matches = amount >= *a && f.is_none_or(|f| &f == from) && t.is_none_or(|t| &t == to);
                    if matches && t.is_some() {
                        expected = true;
                    }
                    if matches && e.armed.is_none() && e.status == Status::Declared {
                        self.entries[id].armed = Some(sender.clone());
                    }
                }
                _ => {}
            }
        }
        if !expected {
            self.flags.push(Flag::UnexpectedIncoming { time: time.clone(), tx: *tx, to: *to });
        }
    }

    fn service_terms(&self, service: &str) -> Option<(u32, String, PromiseId)> {
        self.entries.iter().enumerate().find_map(|(id, e)| match &e.promise.body {
            Body::ProvideService { service: s, capacity, condition, .. } if s == service => Some((*capacity, condition.clone(), id)),
            _ => None,
        })
    }

    fn request(&mut self, time: &Rat, service: &str, requester: &Agent) {
        let Some((capacity, condition, id)) = self.service_terms(service) else {
            self.flags.push(Flag::Unserved { time: time.clone(), service: service.into(), requester: requester.clone() });
            return;
        };
        let granted = self.entries[id].allocated.len() < capacity as usize
            && self.attribute(requester, &condition)
            && !self.entries[id].allocated.contains(requester);
        if granted {
            self.entries[id].allocated.push(requester.clone());
            self.queues.entry(service.into()).or_default().push_back(requester.clone());
        } else {
            self.flags.push(Flag::Unserved { time: time.clone(), service: service.into(), requester: requester.clone() });
        }
    }

    fn delivered(&mut self, time: &Rat, service: &str, provider: &Agent, recipient: &Agent) {
        let head = self.queues.get_mut(service).and_then(|q| {
            let pos = q.iter().position(|a| a == recipient)?;
            q.remove(pos);
            Some(pos == 0)
        });
        for id in 0..self.entries.len() {
            let e = &self.entries[id];
            if &e.promise.promiser != provider && !matches!(e.promise.body, Body::ServeInOrder { .. }) {
                continue;
            }
            match &e.promise.body {
                Body::ProvideService { service: s, .. } if s == service => {
                    if e.allocated.contains(recipient) {
                        self.set_status(id, Status::Satisfied, time);
                    }
                }
                Body::ServeInOrder { service: s } if s == service && head.is_some() => {
                    let s = if head == Some(true) { Status::Satisfied } else { Status::ExpectationLapsed };
                    self.set_status(id, s, time);
                }
                Body::Conditional { then, .. } => {
                    if let Body::ProvideService { service: s, condition, .. } = then.as_ref() {
                        let due_to = e.armed.clone();
                        let fits = match &due_to {
                            Some(Some(sender)) => sender == recipient,
                            Some(None) => e.promise.promisees.contains(recipient),
                            None => false,
                        };
                        if s == service && fits && self.attribute(recipient, condition) {
                            self.set_status(id, Status::Satisfied, time);
                        }
                    }
                }
                _ => {}
            }
        }
    }

    /// Status changes so far, one JSON object per line.
    pub fn status_json_lines(&self) -> String {
        self.log.iter().map(|c| serde_json::to_string(c).expect("status serializes") + "\n").collect()
    }

    /// Agents that `observer` cannot rule out as the controller of
    /// `address`, given the promises it can see.
    pub fn anonymity_set(&self, address: &Address, observer: &str) -> BTreeSet<Agent> {
        let mut set = self.population.clone();
        for id in self.visible_to(observer) {
            let p = &self.entries[id].promise;
            let narrowed: Option<BTreeSet<Agent>> = match &p.body {
                Body::Transfer { from: Some(f), .. } if f == address => Some(BTreeSet::from([p.promiser.clone()])),
                Body::ControlsAddress { address: a } | Body::PublishesOutgoing { address: a } if a == address => {
                    Some(BTreeSet::from([p.promiser.clone()]))
                }
                Body::AcceptsTransfers { address: a } if a == address => {
                    let mut s = p.promisees.clone();
                    s.insert(p.promiser.clone());
                    Some(s)
                }
                Body::Conditional { trigger: Trigger::TransferReceived { from: Some(f), .. }, .. } if f == address => {
                    Some(p.promisees.clone())
                }
                _ => None,
            };
            if let Some(n) = narrowed {
                set = set.intersection(&n).cloned().collect();
            }
        }
        set
    }
}

fn check_body(b: &Body) -> Result<(), PromiseError> {
    match b {
        Body::Transfer { amount, .. } if amount.is_zero() => Err(PromiseError::MalformedBody("zero transfer".into())),
        Body::ProvideService { capacity: 0, .. } => Err(PromiseError::MalformedBody("zero capacity".into())),
        Body::Conditional { then, .. } => match then.as_ref() {
            Body::Conditional { .. } => Err(PromiseError::MalformedBody("nested conditional".into())),
            inner => check_body(inner),
        },
        _ => Ok(()),
    }
}

/// Promise helper with the scope given as a set of names.
pub fn promise(promiser: &str, promisees: &BTreeSet<Agent>, scope: &BTreeSet<Agent>, body: Body) -> Promise {
    Promise { promiser: promiser.into(), promisees: promisees.clone(), scope: scope.clone(), body }
}

pub fn agents(names: &[&str]) -> BTreeSet<Agent> {
    names.iter().map(|n| n.to_string()).collect()
}
