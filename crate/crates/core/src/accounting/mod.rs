//! Units of account over meadow quantities: valuation, wealth shares,
//! taxation, mining business cases and the expected-value estimate.

mod access;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::crypto::{Address, SignatureScheme};
use crate::ledger::{Amount, LedgerState};
use crate::numerics::{Dimension, NumericsError, Quantity, Rat};

pub use access::{c_access_closure, c_access_from, AccessRelation, Agent, Assertion, Challenge, Provenance};

pub const BGUA: &str = "BGUA";
pub const FBGU: &str = "FBGU";
pub const FBGUA: &str = "FBGUA";

/// Dimensionless BGU amounts per address.
pub type Holdings = BTreeMap<Address, Rat>;

pub fn holdings_of(state: &LedgerState, decimals: u32) -> Holdings {
    state.balances.iter().map(|(a, q)| (*a, q.to_units(decimals))).collect()
}

pub fn valuation(q: Amount, decimals: u32) -> Quantity {
    valuation_units(&q.to_units(decimals))
}

/// Any rational, including negative values and values beyond the supply
/// bound.
pub fn valuation_units(q: &Rat) -> Quantity {
    Quantity::of(q.clone(), BGUA)
}

fn share_sum(agent: &str, holdings: &Holdings, access: &AccessRelation) -> Rat {
    access
        .addresses_of(agent)
        .iter()
        .map(|a| {
            let q = holdings.get(a).cloned().unwrap_or_default();
            q.meadow_div(&Rat::from(access.holders(a) as u64))
        })
        .sum()
}

pub fn wealth1(agent: &str, holdings: &Holdings, access: &AccessRelation) -> Quantity {
    Quantity::of(share_sum(agent, holdings, access), BGUA)
}

pub fn wealth2(agent: &str, holdings: &Holdings, raw: &[Assertion], t: &Rat, scheme: SignatureScheme) -> Quantity {
    let confirmed = c_access_closure(raw, t, scheme);
    Quantity::of(share_sum(agent, holdings, &confirmed), FBGUA)
}

/// A hundredth of `wealth1`, converted by `FBGU/BGUA`.
pub fn taxation(agent: &str, holdings: &Holdings, access: &AccessRelation) -> Quantity {
    let w = wealth1(agent, holdings, access);
    let per = Quantity::new(Rat::new(1, 100), Dimension::unit(FBGU).div(&Dimension::unit(BGUA)));
    w.mul(&per)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OperatingCase {
    pub passes: bool,
    /// `e / C_E`, dimensionless.
    pub productivity: Rat,
}

/// Running equipment pays when the cost rate `c_e` does not exceed the
/// earning rate `e`; both are money per time unit.
pub fn operating_case(e: &Quantity, c_e: &Quantity) -> Result<OperatingCase, NumericsError> {
    let ord = c_e.compare(e)?;
    let productivity = e.div(c_e);
    debug_assert!(productivity.dim.is_dimensionless());
    Ok(OperatingCase { passes: ord.is_le(), productivity: productivity.value })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReplacementCase {
    /// `t·e ≥ C_E`
    pub like_for_like: bool,
    /// `t·(e′ − e) ≥ C_E′ − C_E`
    pub upgrade: bool,
}

/// `t` is the write-off period, `e` and `e2` earning rates, `c_e` and
/// `c_e2` equipment prices.
pub fn replacement_case(t: &Quantity, e: &Quantity, e2: &Quantity, c_e: &Quantity, c_e2: &Quantity) -> Result<ReplacementCase, NumericsError> {
    let earned = t.mul(e);
    let like_for_like = earned.compare(c_e)?.is_ge();
    let gain = t.mul(&e2.checked_sub(e)?);
    let extra = c_e2.checked_sub(c_e)?;
    let upgrade = gain.compare(&extra)?.is_ge();
    Ok(ReplacementCase { like_for_like, upgrade })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExpectedValue {
    pub value: Quantity,
    /// Supply was zero, so the meadow quotient gave zero.
    pub zero_supply: bool,
}

/// `p · world_money / supply`.
pub fn expected_value(p: &Rat, world_money: &Quantity, supply: &Rat) -> ExpectedValue {
    ExpectedValue { value: world_money.scale(p).scale(&supply.inverse()), zero_supply: supply.is_zero() }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WealthRow {
    pub agent: String,
    pub t: Rat,
    pub value: Rat,
    pub unit: String,
}

impl WealthRow {
    pub fn new(agent: &str, t: &Rat, q: &Quantity) -> WealthRow {
        WealthRow { agent: agent.into(), t: t.clone(), value: q.value.clone(), unit: q.dim.to_string() }
    }
}

/// `agent,t,value,unit` with a header line.
pub fn wealth_csv(rows: &[WealthRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("row serializes");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv")
}
