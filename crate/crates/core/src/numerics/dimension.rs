use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::NumericsError;

/// Product of base-unit symbols raised to signed integer powers.
///
/// Symbols are open-ended (`BGU`, `FBGUA`, `EUR`, `U`, ...). The empty
/// map is the dimensionless unit. Zero exponents are never stored.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dimension(BTreeMap<String, i32>);

impl Dimension {
    pub fn dimensionless() -> Self {
        Dimension::default()
    }

    pub fn unit(symbol: &str) -> Self {
        Dimension::default().with(symbol, 1)
    }

    pub fn with(mut self, symbol: &str, exp: i32) -> Self {
        let e = self.0.entry(symbol.to_string()).or_insert(0);
        *e += exp;
        if *e == 0 {
            self.0.remove(symbol);
        }
        self
    }

    pub fn is_dimensionless(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exponent(&self, symbol: &str) -> i32 {
        self.0.get(symbol).copied().unwrap_or(0)
    }

    pub fn mul(&self, other: &Dimension) -> Dimension {
        let mut out = self.clone();
        for (s, e) in &other.0 {
            out = out.with(s, *e);
        }
        out
    }

    pub fn div(&self, other: &Dimension) -> Dimension {
        self.mul(&other.inverse())
    }

    pub fn inverse(&self) -> Dimension {
        Dimension(self.0.iter().map(|(s, e)| (s.clone(), -e)).collect())
    }

    pub fn pow(&self, n: i32) -> Dimension {
        if n == 0 {
            return Dimension::dimensionless();
        }
        Dimension(self.0.iter().map(|(s, e)| (s.clone(), e * n)).collect())
    }

    pub fn factors(&self) -> impl Iterator<Item = (&str, i32)> {
        self.0.iter().map(|(s, e)| (s.as_str(), *e))
    }
}

fn write_factor(f: &mut fmt::Formatter<'_>, sym: &str, e: i32) -> fmt::Result {
    if e == 1 {
        write!(f, "{sym}")
    } else {
        write!(f, "{sym}^{e}")
    }
}

impl fmt::Display for Dimension {
    /// Positive factors joined by `*`, then each negative factor after a `/`;
    /// a purely inverse unit starts with `1/`. Dimensionless prints empty.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pos: Vec<_> = self.0.iter().filter(|(_, e)| **e > 0).collect();
        let neg: Vec<_> = self.0.iter().filter(|(_, e)| **e < 0).collect();
        if pos.is_empty() && !neg.is_empty() {
            write!(f, "1")?;
        }
        for (i, (s, e)) in pos.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            write_factor(f, s, **e)?;
        }
        for (s, e) in neg {
            write!(f, "/")?;
            write_factor(f, s, -e)?;
        }
        Ok(())
    }
}

impl fmt::Debug for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_dimensionless() {
            write!(f, "Dimension(1)")
        } else {
            write!(f, "Dimension({self})")
        }
    }
}

impl FromStr for Dimension {
    type Err = NumericsError;

    /// Parses `SYM[^int]` factors joined by `*` and `/`, e.g. `BGU/U`,
    /// `1/EUR^2`, `BGUA*U^-1`. Empty input is dimensionless.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let text = s.trim();
        let mut dim = Dimension::dimensionless();
        if text.is_empty() || text == "1" {
            return Ok(dim);
        }
        let bad = |why: &str| NumericsError::BadUnit(format!("{text}: {why}"));
        let mut sign = 1;
        let mut rest = text;
        let mut first = true;
        loop {
            let end = rest.find(['*', '/']).unwrap_or(rest.len());
            let factor = rest[..end].trim();
            if factor.is_empty() {
                return Err(bad("empty factor"));
            }
            if !(first && factor == "1") {
                let (sym, exp) = match factor.split_once('^') {
                    Some((sym, exp)) => (sym.trim(), exp.trim().parse::<i32>().map_err(|_| bad("bad exponent"))?),
                    None => (factor, 1),
                };
                let valid = sym.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                    && sym.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '[' || c == ']');
                if !valid {
                    return Err(bad("bad symbol"));
                }
                dim = dim.with(sym, sign * exp);
            }
            first = false;
            if end == rest.len() {
                break;
            }
            sign = if rest.as_bytes()[end] == b'/' { -1 } else { 1 };
            rest = &rest[end + 1..];
        }
        Ok(dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_text() {
        let rate = Dimension::unit("BGU").with("U", -1);
        assert_eq!(rate.to_string(), "BGU/U");
        let inv = Dimension::unit("EUR").pow(-2);
        assert_eq!(inv.to_string(), "1/EUR^2");
        assert_eq!(Dimension::dimensionless().to_string(), "");
    }

    #[test]
    fn parse_matches_display() {
        for s in ["BGU/U", "1/EUR^2", "BGUA", "FBGU/BGUA", "BGU^2*NMC/U^3"] {
            let d: Dimension = s.parse().unwrap();
            assert_eq!(d.to_string(), s);
        }
        let d: Dimension = "BGUA*U^-1".parse().unwrap();
        assert_eq!(d.to_string(), "BGUA/U");
    }

    #[test]
    fn cancellation_drops_zero_exponents() {
        let rate = Dimension::unit("BGU").with("U", -1);
        assert!(rate.div(&rate).is_dimensionless());
        assert_eq!(rate.mul(&Dimension::unit("U")), Dimension::unit("BGU"));
    }

    #[test]
    fn rejects_garbage() {
        assert!("BGU//U".parse::<Dimension>().is_err());
        assert!("3BGU".parse::<Dimension>().is_err());
        assert!("BGU^x".parse::<Dimension>().is_err());
    }
}
