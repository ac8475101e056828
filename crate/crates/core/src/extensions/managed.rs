use serde::Serialize;

use super::{ExtError, MoneyProfile, Policy, Schedule};
use crate::crypto::{Address, KeyPair};
use crate::ledger::{Amount, SoloChain, Transaction, TxError, TxId};
use crate::numerics::Rat;

/// One governor decision on the near-money supply.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IssuanceEvent {
    pub time: Rat,
    /// Signed change in quanta.
    pub delta: i128,
    pub supply_after: Amount,
    pub rationale: String,
}

/// A single-producer chain under a money profile. Managed profiles also
/// carry a governor account that new supply flows into and out of.
#[derive(Debug, Clone)]
pub struct ManagedLedger {
    pub profile: MoneyProfile,
    chain: SoloChain,
    governor: Address,
    nonce: u64,
    pub issuance: Vec<IssuanceEvent>,
}

impl ManagedLedger {
    /// `producer` seals blocks and collects their rewards.
    pub fn new(profile: MoneyProfile, producer: KeyPair, governor: Address) -> ManagedLedger {
        let chain = SoloChain::new(profile.params.clone(), producer);
        ManagedLedger { profile, chain, governor, nonce: 0, issuance: Vec::new() }
    }

    pub fn chain(&self) -> &SoloChain {
        &self.chain
    }

    pub fn governor(&self) -> Address {
        self.governor
    }

    pub fn balance(&self, a: &Address) -> Amount {
        self.chain.balance(a)
    }

    /// Coins in existence: everything minted less everything retired.
    pub fn supply(&self) -> Amount {
        let s = self.chain.state();
        s.minted_total.saturating_sub(s.destroyed_total)
    }

    pub fn min_fee(&self) -> Amount {
        self.profile.params.min_fee
    }

    /// Seals one block with whatever is queued.
    pub fn seal(&mut self) {
        self.chain.mine().expect("solo chain seals its own pool");
    }

    /// Expands (`delta > 0`) or contracts the supply through the governor
    /// account.
    pub fn managed_issue(&mut self, time: Rat, delta: i128, rationale: &str) -> Result<Amount, ExtError> {
        if self.profile.policy == Policy::Exim || self.profile.schedule != Schedule::Managed {
            return Err(ExtError::ProfileForbids(format!("{} has no managed supply", self.profile.name)));
        }
        let supply = self.supply();
        let magnitude = Amount(delta.unsigned_abs());
        if delta < 0 {
            if magnitude > supply {
                return Err(ExtError::NegativeSupply);
            }
            self.chain.state_mut().retire(self.governor, magnitude).map_err(|e| ExtError::Ledger(Box::new(e)))?;
        } else {
            self.chain.state_mut().mint(self.governor, magnitude);
        }
        let supply_after = self.supply();
        self.issuance.push(IssuanceEvent { time, delta, supply_after, rationale: rationale.into() });
        Ok(supply_after)
    }

    /// A signed single-input transfer, sealed into its own block.
    pub fn pay(&mut self, key: &KeyPair, to: Address, amount: Amount) -> Result<TxId, TxError> {
        let seq = self.chain.state().next_seq(&key.address);
        self.nonce += 1;
        let mut nonce = [0u8; 16];
        nonce[..8].copy_from_slice(&self.nonce.to_be_bytes());
        let tx = Transaction::transfer(key, seq, nonce, to, amount, self.min_fee());
        let id = self.chain.submit(tx)?;
        self.seal();
        Ok(id)
    }
}

/// Supply path implied by a list of decisions, starting from zero.
pub fn replay_supply(decisions: &[i128]) -> Result<Vec<Amount>, ExtError> {
    let mut supply: i128 = 0;
    decisions
        .iter()
        .map(|d| {
            supply += d;
            if supply < 0 {
                Err(ExtError::NegativeSupply)
            } else {
                Ok(Amount(supply as u128))
            }
        })
        .collect()
}
