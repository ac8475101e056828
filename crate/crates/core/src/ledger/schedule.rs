//! Yield expression and circulation maximum.

use super::{Amount, ChainParams};

/// New coin created by the block at height `k`: `h₀ · 2^(−⌊k/H⌋)` quanta,
/// rounded down, and zero from epoch `E` on.
pub fn block_yield(params: &ChainParams, k: u64) -> Amount {
    let epoch = k / params.halving_interval.max(1);
    if params.epochs.is_some_and(|e| epoch >= e as u64) || epoch >= 128 {
        return Amount::ZERO;
    }
    Amount(params.initial_yield.0 >> epoch)
}

/// Upper bound `C_M = 2 · h₀ · H` on everything the schedule can mint.
pub fn circulation_bound(params: &ChainParams) -> Amount {
    Amount(2 * params.initial_yield.0 * params.halving_interval as u128)
}

/// Exact total the schedule mints over its whole lifetime.
pub fn scheduled_supply(params: &ChainParams) -> Amount {
    let last = params.epochs.map_or(128, |e| e.min(128));
    (0..last)
        .map(|e| Amount((params.initial_yield.0 >> e) * params.halving_interval as u128))
        .sum()
}

/// Total minted by blocks `0..=k`.
pub fn minted_through(params: &ChainParams, k: u64) -> Amount {
    let h = params.halving_interval.max(1);
    let full_epochs = (k + 1) / h;
    let rest = (k + 1) % h;
    let mut total = Amount::ZERO;
    for e in 0..full_epochs.min(128) {
        total = total.checked_add(Amount(block_yield(params, e * h).0 * h as u128)).expect("overflow");
    }
    total.checked_add(Amount(block_yield(params, full_epochs * h).0 * rest as u128)).expect("overflow")
}
