use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::ledger::{checked_sum, Amount};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ServiceError {
    #[error("service insolvent: claims {claims:?} exceed holdings {holdings:?}")]
    Insolvent { claims: Amount, holdings: Amount },
    #[error("unknown claimant `{0}`")]
    UnknownClaimant(String),
    #[error("claim of `{user}` is {available:?}, {needed:?} needed")]
    InsufficientClaim { user: String, needed: Amount, available: Amount },
    #[error("amount overflow")]
    Overflow,
}

/// Claims of indirect users on a service that holds the coins on chain.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ParticipationService {
    claims: BTreeMap<String, Amount>,
}

impl ParticipationService {
    pub fn new<I: IntoIterator<Item = String>>(users: I) -> Self {
        ParticipationService { claims: users.into_iter().map(|u| (u, Amount::ZERO)).collect() }
    }

    pub fn claim(&self, user: &str) -> Option<Amount> {
        self.claims.get(user).copied()
    }

    pub fn claims(&self) -> &BTreeMap<String, Amount> {
        &self.claims
    }

    pub fn total_claims(&self) -> Amount {
        checked_sum(self.claims.values().copied()).expect("claims bounded by holdings")
    }

    pub fn check_solvency(&self, holdings: Amount) -> Result<(), ServiceError> {
        let claims = self.total_claims();
        if claims > holdings {
            return Err(ServiceError::Insolvent { claims, holdings });
        }
        Ok(())
    }

    fn slot(&mut self, user: &str) -> Result<&mut Amount, ServiceError> {
        self.claims.get_mut(user).ok_or_else(|| ServiceError::UnknownClaimant(user.to_string()))
    }

    /// Credits a claim for coins already held; `holdings` includes them.
    pub fn deposit(&mut self, user: &str, amount: Amount, holdings: Amount) -> Result<(), ServiceError> {
        self.check_solvency(holdings)?;
        let before = *self.slot(user)?;
        let after = before.checked_add(amount).ok_or(ServiceError::Overflow)?;
        *self.slot(user)? = after;
        if let Err(e) = self.check_solvency(holdings) {
            *self.slot(user)? = before;
            return Err(e);
        }
        Ok(())
    }

    /// Debits a claim for an on-chain payment of `amount + fee`; the service
    /// bears the fee. Refused if the service would end up insolvent.
    pub fn withdraw(&mut self, user: &str, amount: Amount, fee: Amount, holdings: Amount) -> Result<(), ServiceError> {
        self.check_solvency(holdings)?;
        let available = *self.slot(user)?;
        let rest = available.checked_sub(amount).ok_or_else(|| ServiceError::InsufficientClaim {
            user: user.to_string(),
            needed: amount,
            available,
        })?;
        let outflow = amount.checked_add(fee).ok_or(ServiceError::Overflow)?;
        let left = holdings.checked_sub(outflow).unwrap_or(Amount::ZERO);
        let claims_after = self.total_claims().checked_sub(amount).expect("claim is part of total");
        if holdings < outflow || claims_after > left {
            return Err(ServiceError::Insolvent { claims: claims_after, holdings: left });
        }
        *self.slot(user)? = rest;
        Ok(())
    }

    /// Moves claim between two users; nothing happens on chain.
    pub fn transfer(&mut self, from: &str, to: &str, amount: Amount) -> Result<(), ServiceError> {
        self.slot(to)?;
        let available = *self.slot(from)?;
        let rest = available.checked_sub(amount).ok_or_else(|| ServiceError::InsufficientClaim {
            user: from.to_string(),
            needed: amount,
            available,
        })?;
        *self.slot(from)? = rest;
        let t = self.slot(to)?;
        *t = t.checked_add(amount).ok_or(ServiceError::Overflow)?;
        Ok(())
    }
}
