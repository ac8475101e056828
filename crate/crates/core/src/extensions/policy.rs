use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::crypto::Address;
use crate::promises::{promise, Body, PromiseError, PromiseId, Registry};

/// An item of a user's published policy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PolicyItem {
    /// The user restitutes transfers it receives by mistake.
    Restitution,
    /// Anyone may send coins to `address`, anonymously.
    GiftAccount { address: Address },
    /// Every transfer out of `address` is announced before it is made.
    PublishOutgoing { address: Address },
    /// Free-form condition the user says it meets.
    Condition { condition: String },
}

pub const RESTITUTION: &str = "restitutes-mistaken-transfers";

/// Publishes each item as a promise to, and visible to, every participant.
pub fn policy_announce(reg: &mut Registry, agent: &str, items: &[PolicyItem]) -> Result<Vec<PromiseId>, PromiseError> {
    let everyone: BTreeSet<String> = reg.population().clone();
    items
        .iter()
        .map(|item| {
            let body = match item {
                PolicyItem::Restitution => Body::SatisfiesCondition { condition: RESTITUTION.into() },
                PolicyItem::GiftAccount { address } => Body::AcceptsTransfers { address: *address },
                PolicyItem::PublishOutgoing { address } => Body::PublishesOutgoing { address: *address },
                PolicyItem::Condition { condition } => Body::SatisfiesCondition { condition: condition.clone() },
            };
            reg.declare(promise(agent, &everyone, &everyone, body))
        })
        .collect()
}
