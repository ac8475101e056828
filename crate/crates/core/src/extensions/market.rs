use std::io::Read;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ExtError;
use crate::ledger::Amount;
use crate::numerics::Rat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    BguToNmc,
    NmcToBgu,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExchangeRecord {
    pub time: Rat,
    pub agent: String,
    pub direction: Direction,
    pub paid: Amount,
    pub received: Amount,
    pub rate: Rat,
}

/// Exogenous NMC-per-BGU rate as a step function of time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExchangeMarket {
    path: Vec<(Rat, Rat)>,
    pub orders: Vec<ExchangeRecord>,
}

#[derive(Deserialize)]
struct Row {
    time: String,
    rate: String,
}

impl ExchangeMarket {
    /// Points are sorted by time; a later point at the same time wins.
    pub fn new(mut path: Vec<(Rat, Rat)>) -> Result<ExchangeMarket, ExtError> {
        if let Some((_, r)) = path.iter().find(|(_, r)| *r <= Rat::zero()) {
            return Err(ExtError::NonPositiveRate(r.clone()));
        }
        path.sort_by(|a, b| a.0.cmp(&b.0));
        path.dedup_by(|later, earlier| {
            let same = later.0 == earlier.0;
            if same {
                earlier.1 = later.1.clone();
            }
            same
        });
        Ok(ExchangeMarket { path, orders: Vec::new() })
    }

    pub fn flat(rate: Rat) -> Result<ExchangeMarket, ExtError> {
        ExchangeMarket::new(vec![(Rat::zero(), rate)])
    }

    /// CSV with a `time,rate` header; both columns as exact decimals or
    /// fractions.
    pub fn from_csv<R: Read>(reader: R) -> Result<ExchangeMarket, ExtError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut path = Vec::new();
        for (i, row) in rdr.deserialize::<Row>().enumerate() {
            let row = row.map_err(|e| ExtError::RatePath(e.to_string()))?;
            let parse = |s: &str| s.parse::<Rat>().map_err(|e| ExtError::RatePath(format!("row {}: {e}", i + 1)));
            path.push((parse(&row.time)?, parse(&row.rate)?));
        }
        ExchangeMarket::new(path)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,rate\n");
        for (t, r) in &self.path {
            out.push_str(&format!("{t},{r}\n"));
        }
        out
    }

    /// Multiplicative walk: each step moves the rate by `step_pct` percent
    /// up or down with equal odds.
    pub fn seeded_walk(seed: u64, start: Rat, steps: usize, dt: Rat, step_pct: u32) -> Result<ExchangeMarket, ExtError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let up = Rat::new(100 + step_pct as i64, 100);
        let down = Rat::new(100 - step_pct.min(99) as i64, 100);
        let mut rate = start;
        let mut path = Vec::with_capacity(steps + 1);
        for i in 0..=steps {
            path.push((&dt * &Rat::from_integer(i as i64), rate.clone()));
            rate = if rng.random::<bool>() { &rate * &up } else { &rate * &down };
        }
        ExchangeMarket::new(path)
    }

    pub fn path(&self) -> &[(Rat, Rat)] {
        &self.path
    }

    pub fn rate_at(&self, time: &Rat) -> Result<Rat, ExtError> {
        self.path.iter().rev().find(|(t, _)| t <= time).map(|(_, r)| r.clone()).ok_or_else(|| ExtError::NoRate(time.clone()))
    }

    /// Target amount for `paid` source quanta at the rate posted at `time`.
    pub fn quote(&self, time: &Rat, direction: Direction, paid: Amount, decimals_from: u32, decimals_to: u32) -> Result<(Amount, Rat), ExtError> {
        let rate = self.rate_at(time)?;
        let units = paid.to_units(decimals_from);
        let out = match direction {
            Direction::BguToNmc => &units * &rate,
            Direction::NmcToBgu => units.meadow_div(&rate),
        };
        let received = Amount::from_rat_units(&out, decimals_to).ok_or(ExtError::InexactConversion { amount: units, rate: rate.clone() })?;
        Ok((received, rate))
    }
}
