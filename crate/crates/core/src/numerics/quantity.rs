use std::fmt;
use std::str::FromStr;

use super::{Dimension, NumericsError, Rat};

/// A rational value tagged with its dimension.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Quantity {
    pub value: Rat,
    pub dim: Dimension,
}

impl Quantity {
    pub fn new(value: Rat, dim: Dimension) -> Self {
        Quantity { value, dim }
    }

    pub fn dimensionless(value: Rat) -> Self {
        Quantity { value, dim: Dimension::dimensionless() }
    }

    pub fn of(value: Rat, unit: &str) -> Self {
        Quantity { value, dim: Dimension::unit(unit) }
    }

    pub fn zero_of(dim: Dimension) -> Self {
        Quantity { value: Rat::zero(), dim }
    }

    fn same_dim(&self, other: &Quantity) -> Result<(), NumericsError> {
        if self.dim == other.dim {
            Ok(())
        } else {
            Err(NumericsError::DimensionMismatch { expected: self.dim.clone(), got: other.dim.clone() })
        }
    }

    pub fn checked_add(&self, other: &Quantity) -> Result<Quantity, NumericsError> {
        self.same_dim(other)?;
        Ok(Quantity::new(&self.value + &other.value, self.dim.clone()))
    }

    pub fn checked_sub(&self, other: &Quantity) -> Result<Quantity, NumericsError> {
        self.same_dim(other)?;
        Ok(Quantity::new(&self.value - &other.value, self.dim.clone()))
    }

    pub fn mul(&self, other: &Quantity) -> Quantity {
        Quantity::new(&self.value * &other.value, self.dim.mul(&other.dim))
    }

    /// Total division; the dimension divides even when the value is zero.
    pub fn div(&self, other: &Quantity) -> Quantity {
        Quantity::new(self.value.meadow_div(&other.value), self.dim.div(&other.dim))
    }

    pub fn inverse(&self) -> Quantity {
        Quantity::new(self.value.inverse(), self.dim.inverse())
    }

    pub fn neg(&self) -> Quantity {
        Quantity::new(-&self.value, self.dim.clone())
    }

    pub fn scale(&self, factor: &Rat) -> Quantity {
        Quantity::new(&self.value * factor, self.dim.clone())
    }

    pub fn compare(&self, other: &Quantity) -> Result<std::cmp::Ordering, NumericsError> {
        self.same_dim(other)?;
        Ok(self.value.cmp(&other.value))
    }
}

impl fmt::Display for Quantity {
    /// `<rat> <unit-expr>`, or just `<rat>` when dimensionless.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dim.is_dimensionless() {
            write!(f, "{}", self.value)
        } else {
            write!(f, "{} {}", self.value, self.dim)
        }
    }
}

impl fmt::Debug for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Quantity({self})")
    }
}

impl serde::Serialize for Quantity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl FromStr for Quantity {
    type Err = NumericsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (num, unit) = match s.split_once(char::is_whitespace) {
            Some((n, u)) => (n, u),
            None => (s, ""),
        };
        Ok(Quantity::new(num.parse()?, unit.parse()?))
    }
}
