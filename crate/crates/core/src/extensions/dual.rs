use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::market::{Direction, ExchangeRecord, ExchangeMarket};
use super::{ExtError, IssuanceEvent, ManagedLedger, MoneyProfile, Policy};
use crate::crypto::{Address, KeyPair};
use crate::ledger::Amount;
use crate::netsim::Wallet;
use crate::numerics::Rat;

/// Name of the exchange desk, which also seals blocks on both chains and
/// holds the near-money governor account.
pub const DESK: &str = "desk";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Money {
    Bgu,
    Nmc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoanStatus {
    Open,
    Redeemed,
    Defaulted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Loan {
    pub id: usize,
    pub lender: String,
    pub borrower: String,
    pub principal: Amount,
    /// Fixed when the loan opens.
    pub fee: Amount,
    pub start: Rat,
    pub term: Rat,
    pub status: LoanStatus,
}

impl Loan {
    pub fn redemption(&self) -> Amount {
        self.principal.checked_add(self.fee).expect("loan amount overflow")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ExtEvent {
    Exchange(ExchangeRecord),
    Issuance(IssuanceEvent),
    LoanOpened { time: Rat, loan: usize, lender: String, borrower: String, principal: Amount, fee: Amount },
    LoanRedeemed { time: Rat, loan: usize, paid: Amount },
    /// The borrower could not pay; nothing is taken from it.
    LoanDefaulted { time: Rat, loan: usize, owed: Amount, held: Amount },
}

/// Outcome of exchange in, lend, redeem and exchange out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LoanReport {
    pub loan: Loan,
    pub rate_open: Rat,
    pub rate_close: Option<Rat>,
    pub bgu_paid: Amount,
    pub bgu_received: Amount,
    /// Received less paid, in BGU units, before chain fees.
    pub pnl_bgu: Rat,
    /// Chain fees the lender paid on each money.
    pub fees_bgu: Amount,
    pub fees_nmc: Amount,
}

/// An exim money beside a managed near-money, with one desk trading
/// between them at the posted rate.
#[derive(Debug, Clone)]
pub struct DualSystem {
    pub bgu: ManagedLedger,
    pub nmc: ManagedLedger,
    pub market: ExchangeMarket,
    keys: BTreeMap<String, KeyPair>,
    pub loans: Vec<Loan>,
    pub events: Vec<ExtEvent>,
}

impl DualSystem {
    pub fn new(bgu: MoneyProfile, nmc: MoneyProfile, market: ExchangeMarket, agents: &[&str]) -> Result<DualSystem, ExtError> {
        if bgu.policy != Policy::Exim {
            return Err(ExtError::ProfileForbids(format!("{} must be an exim money", bgu.name)));
        }
        let key = |name: &str, scheme| Wallet::for_name(scheme, name).key().clone();
        let mut keys = BTreeMap::new();
        for &a in agents.iter().chain([DESK].iter()) {
            keys.insert(a.to_string(), key(a, bgu.params.signature));
        }
        let desk = keys[DESK].clone();
        Ok(DualSystem {
            bgu: ManagedLedger::new(bgu, desk.clone(), desk.address),
            nmc: ManagedLedger::new(nmc, desk.clone(), desk.address),
            market,
            keys,
            loans: Vec::new(),
            events: Vec::new(),
        })
    }

    /// Flat-rate system with the Bitguilder and NMcoin presets.
    pub fn standard(market: ExchangeMarket, agents: &[&str]) -> DualSystem {
        DualSystem::new(MoneyProfile::bitguilder(), MoneyProfile::nmcoin(), market, agents).expect("presets are valid")
    }

    fn key(&self, agent: &str) -> Result<KeyPair, ExtError> {
        self.keys.get(agent).cloned().ok_or_else(|| ExtError::UnknownAgent(agent.into()))
    }

    pub fn address(&self, agent: &str) -> Result<Address, ExtError> {
        self.key(agent).map(|k| k.address)
    }

    fn ledger(&mut self, m: Money) -> &mut ManagedLedger {
        match m {
            Money::Bgu => &mut self.bgu,
            Money::Nmc => &mut self.nmc,
        }
    }

    pub fn balance(&self, agent: &str, m: Money) -> Result<Amount, ExtError> {
        let a = self.address(agent)?;
        Ok(match m {
            Money::Bgu => self.bgu.balance(&a),
            Money::Nmc => self.nmc.balance(&a),
        })
    }

    fn pay(&mut self, m: Money, from: &str, to: &str, amount: Amount) -> Result<(), ExtError> {
        let key = self.key(from)?;
        let to = self.address(to)?;
        self.ledger(m).pay(&key, to, amount).map(|_| ()).map_err(|source| ExtError::InsufficientFunds { agent: from.into(), source: Box::new(source) })
    }

    /// Desk seals BGU blocks until it holds `amount`, then pays `agent`.
    pub fn fund_bgu(&mut self, agent: &str, amount: Amount) -> Result<(), ExtError> {
        let desk = self.address(DESK)?;
        let need = amount.checked_add(self.bgu.min_fee()).ok_or(ExtError::NegativeSupply)?;
        while self.bgu.balance(&desk) < need {
            let before = self.bgu.supply();
            self.bgu.seal();
            if self.bgu.supply() == before {
                return Err(ExtError::ProfileForbids("block rewards exhausted".into()));
            }
        }
        self.pay(Money::Bgu, DESK, agent, amount)
    }

    /// Governor decision on the near-money.
    pub fn issue_nmc(&mut self, time: Rat, delta: i128, rationale: &str) -> Result<Amount, ExtError> {
        let supply = self.nmc.managed_issue(time, delta, rationale)?;
        self.events.push(ExtEvent::Issuance(self.nmc.issuance.last().expect("just logged").clone()));
        Ok(supply)
    }

    /// Moves near-money from the governor account (held by the desk).
    pub fn fund_nmc(&mut self, agent: &str, amount: Amount) -> Result<(), ExtError> {
        self.pay(Money::Nmc, DESK, agent, amount)
    }

    /// `agent` pays `paid` to the desk and the desk pays the converted
    /// amount back on the other chain. Each side bears its own fee.
    pub fn exchange(&mut self, time: &Rat, agent: &str, paid: Amount, direction: Direction) -> Result<ExchangeRecord, ExtError> {
        let (from, to) = match direction {
            Direction::BguToNmc => (Money::Bgu, Money::Nmc),
            Direction::NmcToBgu => (Money::Nmc, Money::Bgu),
        };
        let (dec_from, dec_to) = (self.ledger(from).profile.params.quantum_decimals, self.ledger(to).profile.params.quantum_decimals);
        let (received, rate) = self.market.quote(time, direction, paid, dec_from, dec_to)?;
        let desk_holds = self.balance(DESK, to)?;
        if desk_holds < received.checked_add(self.ledger(to).min_fee()).unwrap_or(Amount(u128::MAX)) {
            let source = crate::ledger::TxError::InsufficientFunds { address: self.address(DESK)?, needed: received, available: desk_holds };
            return Err(ExtError::InsufficientFunds { agent: DESK.into(), source: Box::new(source) });
        }
        self.pay(from, agent, DESK, paid)?;
        self.pay(to, DESK, agent, received)?;
        let rec = ExchangeRecord { time: time.clone(), agent: agent.into(), direction, paid, received, rate };
        self.market.orders.push(rec.clone());
        self.events.push(ExtEvent::Exchange(rec.clone()));
        Ok(rec)
    }

    /// Lender pays `principal` to the borrower. Only near-money can be lent.
    pub fn open_loan(&mut self, money: Money, time: Rat, lender: &str, borrower: &str, principal: Amount, fee: Amount, term: Rat) -> Result<usize, ExtError> {
        if self.ledger(money).profile.policy == Policy::Exim {
            return Err(ExtError::ProfileForbids(format!("{} cannot be lent", self.ledger(money).profile.name)));
        }
        self.pay(money, lender, borrower, principal)?;
        let id = self.loans.len();
        self.loans.push(Loan {
            id,
            lender: lender.into(),
            borrower: borrower.into(),
            principal,
            fee,
            start: time.clone(),
            term,
            status: LoanStatus::Open,
        });
        self.events.push(ExtEvent::LoanOpened { time, loan: id, lender: lender.into(), borrower: borrower.into(), principal, fee });
        Ok(id)
    }

    /// At the end of the term the borrower pays `l + f` if it can;
    /// otherwise the loan is marked defaulted and nothing moves.
    pub fn settle_loan(&mut self, id: usize, time: Rat) -> Result<LoanStatus, ExtError> {
        let loan = self.loans[id].clone();
        if loan.status != LoanStatus::Open {
            return Ok(loan.status);
        }
        let owed = loan.redemption();
        let held = self.balance(&loan.borrower, Money::Nmc)?;
        let status = if held >= owed.checked_add(self.nmc.min_fee()).unwrap_or(Amount(u128::MAX)) {
            self.pay(Money::Nmc, &loan.borrower, &loan.lender, owed)?;
            self.events.push(ExtEvent::LoanRedeemed { time, loan: id, paid: owed });
            LoanStatus::Redeemed
        } else {
            self.events.push(ExtEvent::LoanDefaulted { time, loan: id, owed, held });
            LoanStatus::Defaulted
        };
        self.loans[id].status = status;
        Ok(status)
    }

    /// Exchange BGU for `principal` NMC at `start`, lend it, settle after
    /// `term`, and on redemption exchange the `l + f` NMC back to BGU.
    pub fn loan_lifecycle(&mut self, start: Rat, lender: &str, borrower: &str, principal: Amount, fee: Amount, term: Rat) -> Result<LoanReport, ExtError> {
        let rate_open = self.market.rate_at(&start)?;
        let (nmc_dec, bgu_dec) = (self.nmc.profile.params.quantum_decimals, self.bgu.profile.params.quantum_decimals);
        let bgu_units = principal.to_units(nmc_dec).meadow_div(&rate_open);
        let bgu_paid = Amount::from_rat_units(&bgu_units, bgu_dec)
            .ok_or(ExtError::InexactConversion { amount: principal.to_units(nmc_dec), rate: rate_open.clone() })?;
        let bgu_before = self.balance(lender, Money::Bgu)?;
        let nmc_before = self.balance(lender, Money::Nmc)?;
        self.exchange(&start, lender, bgu_paid, Direction::BguToNmc)?;
        let id = self.open_loan(Money::Nmc, start.clone(), lender, borrower, principal, fee, term.clone())?;
        let end = &start + &term;
        let status = self.settle_loan(id, end.clone())?;
        let (rate_close, bgu_received) = if status == LoanStatus::Redeemed {
            let rec = self.exchange(&end, lender, self.loans[id].redemption(), Direction::NmcToBgu)?;
            (Some(rec.rate), rec.received)
        } else {
            (None, Amount::ZERO)
        };
        let pnl_bgu = &bgu_received.to_units(bgu_dec) - &bgu_paid.to_units(bgu_dec);
        let bgu_after = self.balance(lender, Money::Bgu)?;
        let nmc_after = self.balance(lender, Money::Nmc)?;
        // Balance changes beyond the loan flows are the lender's fees.
        let fees_bgu = Amount((bgu_before.0 + bgu_received.0) - bgu_after.0 - bgu_paid.0);
        // Loan flows on the near-money cancel out; what is left is fees.
        let fees_nmc = nmc_before.saturating_sub(nmc_after);
        Ok(LoanReport { loan: self.loans[id].clone(), rate_open, rate_close, bgu_paid, bgu_received, pnl_bgu, fees_bgu, fees_nmc })
    }

    pub fn json_lines(&self) -> String {
        self.events.iter().map(|e| serde_json::to_string(e).expect("event serializes") + "\n").collect()
    }
}
