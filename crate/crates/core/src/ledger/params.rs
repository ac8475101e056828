use serde::{Deserialize, Serialize};

use super::Amount;
use crate::crypto::{HashAlg, SignatureScheme};

/// Optional transaction kinds and the double-spend penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Features {
    pub future: bool,
    pub conditional: bool,
    pub destruction: bool,
    pub restitution: bool,
    pub penalties: bool,
}

impl Default for Features {
    fn default() -> Self {
        Features::none()
    }
}

impl Features {
    pub fn none() -> Self {
        Features { future: false, conditional: false, destruction: false, restitution: false, penalties: false }
    }

    pub fn all() -> Self {
        Features { future: true, conditional: true, destruction: true, restitution: true, penalties: true }
    }
}

/// Everything a participant needs to validate blocks of one chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainParams {
    pub name: String,
    /// Unit symbol, e.g. `BTC`, `BGU`, `NMC`.
    pub unit: String,
    /// The quantum is `10^-quantum_decimals` units.
    pub quantum_decimals: u32,
    /// New coin per block in the first epoch, in quanta (`h₀`).
    pub initial_yield: Amount,
    /// Blocks per epoch (`H`).
    pub halving_interval: u64,
    /// Number of rewarding epochs (`E`); `None` runs until the halved
    /// reward rounds down to zero.
    pub epochs: Option<u32>,
    pub min_fee: Amount,
    /// Least external difficulty `m` a block may carry.
    pub difficulty: u64,
    /// Exponential sloping of the puzzle in the covered transaction count.
    pub alpha: u32,
    pub hash: HashAlg,
    pub signature: SignatureScheme,
    pub features: Features,
}

impl ChainParams {
    /// Bitcoin-like parameters: 50 BTC halving every 210,000 blocks,
    /// quantum `10^-8`.
    pub fn bitcoin() -> Self {
        ChainParams {
            name: "bitcoin".into(),
            unit: "BTC".into(),
            quantum_decimals: 8,
            initial_yield: Amount(50 * 100_000_000),
            halving_interval: 210_000,
            epochs: None,
            min_fee: Amount(1),
            difficulty: 1,
            alpha: 0,
            hash: HashAlg::Sha256,
            signature: SignatureScheme::Ecdsa,
            features: Features::none(),
        }
    }

    /// Small desk-sized schedule: `h₀ = 50`, `H = 10`, six epochs.
    pub fn desk() -> Self {
        ChainParams {
            name: "desk".into(),
            unit: "units".into(),
            quantum_decimals: 8,
            initial_yield: Amount(50 * 100_000_000),
            halving_interval: 10,
            epochs: Some(6),
            min_fee: Amount(1),
            difficulty: 16,
            alpha: 0,
            hash: HashAlg::Sha256,
            signature: SignatureScheme::Ecdsa,
            features: Features::none(),
        }
    }

    /// Bitcoin with units renamed to BGU.
    pub fn bitguilder() -> Self {
        ChainParams { name: "bitguilder".into(), unit: "BGU".into(), ..ChainParams::bitcoin() }
    }

    /// Bitguilder with femto quanta (`10^-15` BGU) and every extension on.
    pub fn bitguilder_plus() -> Self {
        ChainParams {
            name: "bitguilder-plus".into(),
            unit: "BGU".into(),
            quantum_decimals: 15,
            initial_yield: Amount(50 * 10u128.pow(15)),
            features: Features::all(),
            ..ChainParams::bitcoin()
        }
    }

    /// Managed near-money. Blocks mint nothing; supply comes from issuance.
    pub fn nmcoin() -> Self {
        ChainParams {
            name: "nmcoin".into(),
            unit: "NMC".into(),
            initial_yield: Amount::ZERO,
            ..ChainParams::bitcoin()
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        Some(match name {
            "bitcoin" => Self::bitcoin(),
            "desk" => Self::desk(),
            "bitguilder" => Self::bitguilder(),
            "bitguilder-plus" => Self::bitguilder_plus(),
            "nmcoin" => Self::nmcoin(),
            _ => return None,
        })
    }

    pub fn units(&self, text: &str) -> Option<Amount> {
        Amount::from_units(text, self.quantum_decimals)
    }

    pub fn whole_units(&self, n: u64) -> Amount {
        Amount(n as u128 * 10u128.pow(self.quantum_decimals))
    }
}
