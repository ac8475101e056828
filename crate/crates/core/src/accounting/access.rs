use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use crate::crypto::{verify, Address, KeyPair, Signature, SignatureScheme};
use crate::numerics::Rat;

pub type Agent = String;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    AssertedBySelf,
    Demonstrated,
    SharedAssertion { by: Agent },
}

/// Who has access to which address at one time point.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AccessRelation {
    pairs: BTreeMap<(Agent, Address), Provenance>,
}

impl AccessRelation {
    pub fn new() -> AccessRelation {
        AccessRelation::default()
    }

    /// Plain access, as stated by the agent itself.
    pub fn from_pairs<'a, I: IntoIterator<Item = (&'a str, Address)>>(pairs: I) -> AccessRelation {
        let mut rel = AccessRelation::new();
        for (agent, a) in pairs {
            rel.insert(agent, a, Provenance::AssertedBySelf);
        }
        rel
    }

    /// Keeps the first provenance recorded for a pair.
    pub fn insert(&mut self, agent: &str, address: Address, why: Provenance) -> bool {
        let key = (agent.to_string(), address);
        if self.pairs.contains_key(&key) {
            return false;
        }
        self.pairs.insert(key, why);
        true
    }

    pub fn has(&self, agent: &str, address: &Address) -> bool {
        self.pairs.contains_key(&(agent.to_string(), *address))
    }

    pub fn provenance(&self, agent: &str, address: &Address) -> Option<&Provenance> {
        self.pairs.get(&(agent.to_string(), *address))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn agents(&self) -> BTreeSet<Agent> {
        self.pairs.keys().map(|(p, _)| p.clone()).collect()
    }

    pub fn addresses_of(&self, agent: &str) -> Vec<Address> {
        self.pairs.keys().filter(|(p, _)| p == agent).map(|(_, a)| *a).collect()
    }

    /// Number of agents with access to `address`.
    pub fn holders(&self, address: &Address) -> usize {
        self.pairs.keys().filter(|(_, a)| a == address).count()
    }

    pub fn is_subset(&self, other: &AccessRelation) -> bool {
        self.pairs.keys().all(|k| other.pairs.contains_key(k))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&str, &Address, &Provenance)> {
        self.pairs.iter().map(|((p, a), w)| (p.as_str(), a, w))
    }
}

/// A request from an external checker to prove control of `address`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Challenge {
    pub address: Address,
    pub nonce: u64,
    pub time: Rat,
}

impl Challenge {
    pub fn message(&self) -> Vec<u8> {
        Sha256::new()
            .chain_update(b"access-challenge")
            .chain_update(self.address.0)
            .chain_update(self.nonce.to_be_bytes())
            .chain_update(self.time.to_string().as_bytes())
            .finalize()
            .to_vec()
    }

    pub fn answer(&self, key: &KeyPair) -> Signature {
        key.sign(&self.message())
    }

    pub fn check(&self, scheme: SignatureScheme, sig: &Signature) -> bool {
        verify(scheme, &self.address, &self.message(), sig).unwrap_or(false)
    }
}

/// A raw statement gathered by the checker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Assertion {
    /// The agent confirmed, on request, that it had access.
    Confirmed { agent: Agent, address: Address, time: Rat },
    /// The agent answered a challenge for the address.
    Demonstrated { agent: Agent, challenge: Challenge, signature: Signature },
    /// `asserter` said it shared access with `with`.
    Shared { asserter: Agent, with: Agent, address: Address, time: Rat },
}

/// Confirmed access before `t`: the least relation closed under the two
/// rules (own confirmation plus a valid demonstration; a shared-access
/// statement by an agent already confirmed).
pub fn c_access_closure(raw: &[Assertion], t: &Rat, scheme: SignatureScheme) -> AccessRelation {
    c_access_from(AccessRelation::new(), raw, t, scheme)
}

/// Same fixpoint, starting from `seed`.
pub fn c_access_from(mut rel: AccessRelation, raw: &[Assertion], t: &Rat, scheme: SignatureScheme) -> AccessRelation {
    let confirmed: BTreeSet<(&str, Address)> = raw
        .iter()
        .filter_map(|x| match x {
            Assertion::Confirmed { agent, address, time } if time < t => Some((agent.as_str(), *address)),
            _ => None,
        })
        .collect();
    for x in raw {
        if let Assertion::Demonstrated { agent, challenge, signature } = x {
            if &challenge.time < t && confirmed.contains(&(agent.as_str(), challenge.address)) && challenge.check(scheme, signature) {
                rel.insert(agent, challenge.address, Provenance::Demonstrated);
            }
        }
    }
    loop {
        let mut grew = false;
        for x in raw {
            if let Assertion::Shared { asserter, with, address, time } = x {
                if time < t && rel.has(asserter, address) && !rel.has(with, address) {
                    rel.insert(with, *address, Provenance::SharedAssertion { by: asserter.clone() });
                    grew = true;
                }
            }
        }
        if !grew {
            return rel;
        }
    }
}
