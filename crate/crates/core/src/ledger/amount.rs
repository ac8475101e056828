use std::fmt;
use std::iter::Sum;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::numerics::{Quantity, Rat};

/// Non-negative count of quanta (the smallest transferable fraction of a
/// unit). All ledger arithmetic is checked and exact.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Amount(pub u128);

impl Amount {
    pub const ZERO: Amount = Amount(0);

    pub fn quanta(self) -> u128 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn checked_add(self, rhs: Amount) -> Option<Amount> {
        self.0.checked_add(rhs.0).map(Amount)
    }

    pub fn checked_sub(self, rhs: Amount) -> Option<Amount> {
        self.0.checked_sub(rhs.0).map(Amount)
    }

    pub fn saturating_sub(self, rhs: Amount) -> Amount {
        Amount(self.0.saturating_sub(rhs.0))
    }

    /// Whole units given `10^-decimals` quanta, for parsing `"12.5"`.
    pub fn from_units(text: &str, decimals: u32) -> Option<Amount> {
        let r: Rat = text.parse().ok()?;
        Amount::from_rat_units(&r, decimals)
    }

    /// Exact conversion of a unit value; fails when the value is negative or
    /// not a multiple of the quantum.
    pub fn from_rat_units(units: &Rat, decimals: u32) -> Option<Amount> {
        let scaled = units * &Rat::from_integer(BigInt::from(10u32).pow(decimals));
        let n = scaled.to_integer()?;
        u128::try_from(n).ok().map(Amount)
    }

    pub fn to_units(self, decimals: u32) -> Rat {
        Rat::from_decimal_scaled(BigInt::from(self.0), decimals)
    }

    pub fn to_quantity(self, decimals: u32, unit: &str) -> Quantity {
        Quantity::of(self.to_units(decimals), unit)
    }

    pub fn display_units(self, decimals: u32) -> String {
        let q = 10u128.pow(decimals);
        let whole = self.0 / q;
        let frac = self.0 % q;
        if frac == 0 {
            return whole.to_string();
        }
        let s = format!("{frac:0width$}", width = decimals as usize);
        format!("{whole}.{}", s.trim_end_matches('0'))
    }
}

impl fmt::Display for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}q", self.0)
    }
}

impl From<u128> for Amount {
    fn from(v: u128) -> Self {
        Amount(v)
    }
}

impl From<u64> for Amount {
    fn from(v: u64) -> Self {
        Amount(v as u128)
    }
}

/// Sums with overflow detection; `None` on overflow.
pub fn checked_sum<I: IntoIterator<Item = Amount>>(it: I) -> Option<Amount> {
    it.into_iter().try_fold(Amount::ZERO, |acc, a| acc.checked_add(a))
}

impl Sum for Amount {
    fn sum<I: Iterator<Item = Amount>>(iter: I) -> Amount {
        checked_sum(iter).expect("amount overflow")
    }
}
