//! Money profiles, managed issuance for a near-money, a BGU/NMC exchange
//! desk, fee-based NMC loans and published user policies.

mod dual;
mod managed;
mod market;
mod policy;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ledger::{Amount, ChainParams, TxError};
use crate::numerics::Rat;

pub use dual::{DualSystem, ExtEvent, Loan, LoanReport, LoanStatus, Money, DESK};
pub use managed::{replay_supply, IssuanceEvent, ManagedLedger};
pub use market::{Direction, ExchangeMarket, ExchangeRecord};
pub use policy::{policy_announce, PolicyItem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    /// Access-only money: balances change only through signed transactions.
    Exim,
    /// Informational money that a governor may expand or contract.
    Tim,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    FixedHalving,
    Managed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoneyProfile {
    pub name: String,
    pub policy: Policy,
    pub schedule: Schedule,
    pub params: ChainParams,
}

impl MoneyProfile {
    pub fn new(name: &str, policy: Policy, schedule: Schedule, params: ChainParams) -> Result<MoneyProfile, ExtError> {
        if schedule == Schedule::Managed && policy == Policy::Exim {
            return Err(ExtError::ProfileForbids(format!("{name}: managed supply on an exim money")));
        }
        if schedule == Schedule::Managed && !params.initial_yield.is_zero() {
            return Err(ExtError::ProfileForbids(format!("{name}: managed supply with block rewards")));
        }
        Ok(MoneyProfile { name: name.into(), policy, schedule, params })
    }

    pub fn bitguilder() -> MoneyProfile {
        MoneyProfile::new("bitguilder", Policy::Exim, Schedule::FixedHalving, ChainParams::bitguilder()).expect("valid preset")
    }

    pub fn bitguilder_plus() -> MoneyProfile {
        MoneyProfile::new("bitguilder-plus", Policy::Exim, Schedule::FixedHalving, ChainParams::bitguilder_plus()).expect("valid preset")
    }

    pub fn nmcoin() -> MoneyProfile {
        MoneyProfile::new("nmcoin", Policy::Tim, Schedule::Managed, ChainParams::nmcoin()).expect("valid preset")
    }

    pub fn quantum(&self) -> Rat {
        Amount(1).to_units(self.params.quantum_decimals)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtError {
    #[error("profile forbids this: {0}")]
    ProfileForbids(String),
    #[error("supply would drop below zero")]
    NegativeSupply,
    #[error("no rate posted at time {0}")]
    NoRate(Rat),
    #[error("rate must be positive, got {0}")]
    NonPositiveRate(Rat),
    #[error("{amount} at rate {rate} is not a whole number of quanta")]
    InexactConversion { amount: Rat, rate: Rat },
    #[error("insufficient funds for {agent}: {source}")]
    InsufficientFunds { agent: String, source: Box<TxError> },
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("rate path: {0}")]
    RatePath(String),
    #[error("ledger rejected the operation: {0}")]
    Ledger(Box<TxError>),
}
