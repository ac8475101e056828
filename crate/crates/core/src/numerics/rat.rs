//! Exact rationals with total division.
//!
//! `Rat` behaves as the signed cancellation meadow of the rational numbers:
//! every operation is total, `0⁻¹ = 0`, and values are kept normalized
//! (`gcd(|num|, den) = 1`, `den > 0`).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::NumericsError;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Rat {
    num: BigInt,
    den: BigInt,
}

impl Rat {
    /// Builds `num/den`, normalizing sign and common factors. A zero
    /// denominator yields zero, as meadow division does.
    pub fn new(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Self {
        let num = num.into();
        let den = den.into();
        if den.is_zero() {
            return Rat::zero();
        }
        Self::normalized(num, den)
    }

    fn normalized(mut num: BigInt, mut den: BigInt) -> Self {
        if den.is_negative() {
            num = -num;
            den = -den;
        }
        if num.is_zero() {
            return Rat::zero();
        }
        let g = num.gcd(&den);
        if !g.is_one() {
            num /= &g;
            den /= &g;
        }
        Rat { num, den }
    }

    pub fn zero() -> Self {
        Rat { num: BigInt::zero(), den: BigInt::one() }
    }

    pub fn one() -> Self {
        Rat::from_integer(1)
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Rat { num: n.into(), den: BigInt::one() }
    }

    /// `mantissa · 10^(-decimals)`.
    pub fn from_decimal_scaled(mantissa: impl Into<BigInt>, decimals: u32) -> Self {
        Rat::new(mantissa, BigInt::from(10u32).pow(decimals))
    }

    pub fn numer(&self) -> &BigInt {
        &self.num
    }

    pub fn denom(&self) -> &BigInt {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.den.is_one()
    }

    pub fn is_negative(&self) -> bool {
        self.num.is_negative()
    }

    pub fn abs(&self) -> Rat {
        Rat { num: self.num.abs(), den: self.den.clone() }
    }

    /// Meadow inverse: `x⁻¹` for `x ≠ 0`, and `0⁻¹ = 0`.
    pub fn inverse(&self) -> Rat {
        if self.is_zero() {
            return Rat::zero();
        }
        Self::normalized(self.den.clone(), self.num.clone())
    }

    /// Total division `x · y⁻¹`.
    pub fn meadow_div(&self, rhs: &Rat) -> Rat {
        self * &rhs.inverse()
    }

    pub fn pow(&self, exp: i32) -> Rat {
        let base = if exp < 0 { self.inverse() } else { self.clone() };
        let e = exp.unsigned_abs();
        Rat::normalized(base.num.pow(e), base.den.pow(e))
    }

    pub fn floor(&self) -> BigInt {
        self.num.div_floor(&self.den)
    }

    /// Exact integer value, if the denominator is one.
    pub fn to_integer(&self) -> Option<BigInt> {
        self.is_integer().then(|| self.num.clone())
    }

    pub fn to_f64(&self) -> f64 {
        if self.num.is_zero() {
            return 0.0;
        }
        // Bring both parts to 64 significant bits, then rescale by the
        // difference in shifts.
        fn top(x: &BigInt) -> (f64, i64) {
            let s = x.bits() as i64 - 64;
            let v = if s > 0 { x >> s as usize } else { x << (-s) as usize };
            (v.to_f64().unwrap_or(0.0), s)
        }
        let (n, ns) = top(&self.num);
        let (d, ds) = top(&self.den);
        let mut r = n / d;
        let mut e = ns - ds;
        while e > 0 {
            let step = e.min(1000);
            r *= 2f64.powi(step as i32);
            e -= step;
        }
        while e < 0 {
            let step = (-e).min(1000);
            r /= 2f64.powi(step as i32);
            e += step;
        }
        r
    }

    /// Exact conversion of a finite `f64`; non-finite inputs map to zero.
    pub fn from_f64_exact(x: f64) -> Rat {
        if !x.is_finite() || x == 0.0 {
            return Rat::zero();
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1 } else { 1 };
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
        let mant = BigInt::from(mant) * sign;
        if e >= 0 {
            Rat::from_integer(mant << e as usize)
        } else {
            Rat::new(mant, BigInt::one() << (-e) as usize)
        }
    }

    /// Rounds `x` down onto the grid `1/den`.
    pub fn from_f64_grid(x: f64, den: u64) -> Rat {
        Rat::new(BigInt::from((x * den as f64).floor() as i128), den)
    }

    /// Parses decimal notation such as `3.4`, `-0.125` or `12`.
    pub fn from_decimal_str(s: &str) -> Result<Rat, NumericsError> {
        let s = s.trim();
        let bad = || NumericsError::BadNumber(s.to_string());
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let digits = format!("{int_part}{frac_part}");
        let mantissa = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).map_err(|_| bad())?;
        let r = Rat::from_decimal_scaled(mantissa, frac_part.len() as u32);
        Ok(if neg { -r } else { r })
    }

    pub fn is_normalized(&self) -> bool {
        self.den.is_positive() && self.num.gcd(&self.den).is_one()
            || (self.num.is_zero() && self.den.is_one())
    }

    /// Magnitude of the denominator as an unsigned integer.
    pub fn denom_unsigned(&self) -> BigUint {
        self.den.magnitude().clone()
    }

    pub fn signum(&self) -> Sign {
        self.num.sign()
    }
}

impl Default for Rat {
    fn default() -> Self {
        Rat::zero()
    }
}

impl From<i64> for Rat {
    fn from(n: i64) -> Self {
        Rat::from_integer(n)
    }
}

impl From<u64> for Rat {
    fn from(n: u64) -> Self {
        Rat::from_integer(n)
    }
}

impl From<u128> for Rat {
    fn from(n: u128) -> Self {
        Rat::from_integer(n)
    }
}

impl From<i32> for Rat {
    fn from(n: i32) -> Self {
        Rat::from_integer(n)
    }
}

impl From<BigInt> for Rat {
    fn from(n: BigInt) -> Self {
        Rat::from_integer(n)
    }
}

impl<'a> Add<&'a Rat> for &'a Rat {
    type Output = Rat;
    fn add(self, rhs: &Rat) -> Rat {
        if self.den == rhs.den {
            return Rat::normalized(&self.num + &rhs.num, self.den.clone());
        }
        Rat::normalized(&self.num * &rhs.den + &rhs.num * &self.den, &self.den * &rhs.den)
    }
}

impl<'a> Sub<&'a Rat> for &'a Rat {
    type Output = Rat;
    fn sub(self, rhs: &Rat) -> Rat {
        self + &(-rhs)
    }
}

impl<'a> Mul<&'a Rat> for &'a Rat {
    type Output = Rat;
    fn mul(self, rhs: &Rat) -> Rat {
        Rat::normalized(&self.num * &rhs.num, &self.den * &rhs.den)
    }
}

impl Neg for &Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat { num: -&self.num, den: self.den.clone() }
    }
}

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat { num: -self.num, den: self.den }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Rat> for Rat {
            type Output = Rat;
            fn $m(self, rhs: Rat) -> Rat {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a Rat> for Rat {
            type Output = Rat;
            fn $m(self, rhs: &Rat) -> Rat {
                (&self).$m(rhs)
            }
        }
        impl<'a> $tr<Rat> for &'a Rat {
            type Output = Rat;
            fn $m(self, rhs: Rat) -> Rat {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl AddAssign<&Rat> for Rat {
    fn add_assign(&mut self, rhs: &Rat) {
        *self = &*self + rhs;
    }
}

impl SubAssign<&Rat> for Rat {
    fn sub_assign(&mut self, rhs: &Rat) {
        *self = &*self - rhs;
    }
}

impl std::iter::Sum for Rat {
    fn sum<I: Iterator<Item = Rat>>(iter: I) -> Rat {
        iter.fold(Rat::zero(), |acc, x| acc + x)
    }
}

impl Ord for Rat {
    fn cmp(&self, other: &Self) -> Ordering {
        (&self.num * &other.den).cmp(&(&other.num * &self.den))
    }
}

impl PartialOrd for Rat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rat {
    type Err = NumericsError;

    /// Accepts the canonical `num/den` form as well as decimal notation.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n = BigInt::from_str(n.trim()).map_err(|_| NumericsError::BadNumber(s.to_string()))?;
            let d = BigInt::from_str(d.trim()).map_err(|_| NumericsError::BadNumber(s.to_string()))?;
            return Ok(Rat::new(n, d));
        }
        Rat::from_decimal_str(s)
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(i64),
            Float(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Int(n) => Ok(Rat::from_integer(n)),
            Repr::Float(x) => Rat::from_decimal_str(&x.to_string()).map_err(serde::de::Error::custom),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Total division on rationals.
pub fn meadow_div(x: &Rat, y: &Rat) -> Rat {
    x.meadow_div(y)
}
