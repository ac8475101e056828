use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::NetsimError;
use crate::consensus::ForkRule;
use crate::crypto::{HashAlg, SignatureScheme};
use crate::ledger::{Amount, ChainParams, Features};
use crate::numerics::Rat;

/// A complete simulation setup, normally read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Missing seed means seed 0.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub money: MoneyConfig,
    #[serde(default)]
    pub consensus: ConsensusConfig,
    #[serde(default)]
    pub latency: Latency,
    #[serde(default)]
    pub mining: MiningConfig,
    #[serde(default)]
    pub setup: SetupConfig,
    #[serde(default)]
    pub participants: Vec<ParticipantConfig>,
    #[serde(default)]
    pub actions: Vec<Action>,
    #[serde(default)]
    pub stop: StopCondition,
    #[serde(default)]
    pub metrics: MetricsConfig,
    /// Optional Monte Carlo sweep run by `run-scenario` instead of a single run.
    #[serde(default)]
    pub double_spend: Option<DoubleSpendExperiment>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MoneyConfig {
    pub profile: String,
    pub quantum_decimals: Option<u32>,
    /// `h₀` in units, e.g. `"50"`.
    pub initial_yield: Option<String>,
    pub halving_interval: Option<u64>,
    pub epochs: Option<u32>,
    pub min_fee: Option<String>,
    pub difficulty: Option<u64>,
    pub alpha: Option<u32>,
    pub hash: Option<HashAlg>,
    pub signature: Option<SignatureScheme>,
    pub features: Option<Features>,
}

impl Default for MoneyConfig {
    fn default() -> Self {
        MoneyConfig {
            profile: "desk".into(),
            quantum_decimals: None,
            initial_yield: None,
            halving_interval: None,
            epochs: None,
            min_fee: None,
            difficulty: None,
            alpha: None,
            hash: None,
            signature: None,
            features: None,
        }
    }
}

impl MoneyConfig {
    pub fn params(&self) -> Result<ChainParams, NetsimError> {
        let mut p = ChainParams::by_name(&self.profile)
            .ok_or_else(|| invalid(format!("unknown money profile `{}`", self.profile)))?;
        if let Some(d) = self.quantum_decimals {
            if d > 30 {
                return Err(invalid("quantum_decimals above 30".into()));
            }
            p.quantum_decimals = d;
        }
        let units = |field: &str, s: &str, p: &ChainParams| {
            p.units(s).ok_or_else(|| invalid(format!("{field}: `{s}` is not an amount")))
        };
        if let Some(s) = &self.initial_yield {
            p.initial_yield = units("initial_yield", s, &p)?;
        }
        if let Some(h) = self.halving_interval {
            if h == 0 {
                return Err(invalid("halving_interval must be positive".into()));
            }
            p.halving_interval = h;
        }
        if self.epochs.is_some() {
            p.epochs = self.epochs;
        }
        if let Some(s) = &self.min_fee {
            p.min_fee = units("min_fee", s, &p)?;
        }
        if let Some(m) = self.difficulty {
            if m == 0 {
                return Err(invalid("difficulty must be positive".into()));
            }
            p.difficulty = m;
        }
        if let Some(a) = self.alpha {
            p.alpha = a;
        }
        if let Some(h) = self.hash {
            p.hash = h;
        }
        if let Some(s) = self.signature {
            p.signature = s;
        }
        if let Some(f) = self.features {
            p.features = f;
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConsensusConfig {
    pub epsilon: Rat,
    /// Zero disables the checkpoint.
    pub checkpoint: u64,
}

impl Default for ConsensusConfig {
    fn default() -> Self {
        ConsensusConfig { epsilon: Rat::zero(), checkpoint: 100 }
    }
}

impl ConsensusConfig {
    pub fn rule(&self) -> ForkRule {
        ForkRule { epsilon: self.epsilon.clone(), checkpoint: (self.checkpoint > 0).then_some(self.checkpoint) }
    }
}

/// Message delay in ticks. Draws land on a grid of 1/1000 tick.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Latency {
    Fixed { ticks: Rat },
    Uniform { lo: Rat, hi: Rat },
}

impl Default for Latency {
    fn default() -> Self {
        Latency::Uniform { lo: Rat::from_integer(1), hi: Rat::from_integer(5) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MiningMode {
    /// Exponential block times; puzzles are still solved for validity.
    #[default]
    Sampled,
    /// Block time is the attempt count of a real puzzle search divided by
    /// the miner's hash rate.
    Hashcash,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiningConfig {
    pub mode: MiningMode,
    /// Expected ticks per block for the whole network at the base difficulty.
    pub block_interval: f64,
    /// Most transactions per block.
    pub max_block_txs: usize,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig { mode: MiningMode::Sampled, block_interval: 600.0, max_block_txs: 64 }
    }
}

/// Blocks built before time zero and handed to everybody.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SetupConfig {
    pub prefix_blocks: u64,
    /// Who mines the prefix; defaults to the first miner.
    pub prefix_miner: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    User,
    Miner,
    IndirectUser,
    ParticipationService,
    /// Mines honestly until an attack action starts.
    Attacker,
}

impl Role {
    pub fn mines(self) -> bool {
        matches!(self, Role::Miner | Role::Attacker)
    }

    pub fn holds_keys(self) -> bool {
        self != Role::IndirectUser
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticipantConfig {
    pub name: String,
    pub role: Role,
    #[serde(default)]
    pub hash_power: f64,
    /// For indirect users: the service holding their claims.
    #[serde(default)]
    pub service: Option<String>,
    /// Keep the key constructor apart from the network-facing parts.
    #[serde(default = "yes")]
    pub isolated_constructor: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Action {
    Transfer {
        at: Rat,
        from: String,
        to: String,
        amount: String,
        #[serde(default)]
        fee: Option<String>,
    },
    Partition {
        at: Rat,
        groups: Vec<Vec<String>>,
        #[serde(default)]
        heal: Option<Rat>,
    },
    /// `from` pays `amount` to the service on chain; the claim of `user`
    /// is credited once the payment is in the service's chain.
    Deposit {
        at: Rat,
        service: String,
        user: String,
        from: String,
        amount: String,
        #[serde(default)]
        fee: Option<String>,
    },
    /// The service pays `amount` of the user's claim to `to` on chain.
    Withdraw {
        at: Rat,
        service: String,
        user: String,
        to: String,
        amount: String,
        #[serde(default)]
        fee: Option<String>,
    },
    /// Claim moves between two indirect users of the same service.
    ClaimTransfer { at: Rat, service: String, from: String, to: String, amount: String },
    /// Pay `victim` in public, pay oneself with the same coin in private.
    DoubleSpend {
        at: Rat,
        attacker: String,
        victim: String,
        amount: String,
        k_c: u64,
        #[serde(default = "default_give_up")]
        give_up: u64,
    },
    /// Mine privately from `depth` blocks below the tip until heavier.
    MajorityRewrite { at: Rat, attacker: String, depth: u64 },
}

fn default_give_up() -> u64 {
    12
}

impl Action {
    pub fn at(&self) -> &Rat {
        match self {
            Action::Transfer { at, .. }
            | Action::Partition { at, .. }
            | Action::Deposit { at, .. }
            | Action::Withdraw { at, .. }
            | Action::ClaimTransfer { at, .. }
            | Action::DoubleSpend { at, .. }
            | Action::MajorityRewrite { at, .. } => at,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopCondition {
    /// Stop once an honest participant's chain holds this many blocks.
    pub blocks: Option<u64>,
    pub time: Option<Rat>,
    /// Stop as soon as every attack has an outcome.
    pub on_attack_outcome: bool,
    /// Hard bound on processed events.
    pub max_events: u64,
}

impl Default for StopCondition {
    fn default() -> Self {
        StopCondition { blocks: Some(10), time: None, on_attack_outcome: true, max_events: 10_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Compare honest tips after every change of view.
    pub track_forks: bool,
    pub supply_samples: bool,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig { track_forks: true, supply_samples: true }
    }
}

/// Sweep over attacker power and confirmation depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DoubleSpendExperiment {
    pub q: Vec<f64>,
    pub k_c: Vec<u64>,
    pub runs: u64,
    pub give_up: u64,
    pub horizon_blocks: u64,
}

impl Default for DoubleSpendExperiment {
    fn default() -> Self {
        DoubleSpendExperiment { q: vec![0.1, 0.2, 0.3], k_c: (0..=6).collect(), runs: 1000, give_up: 12, horizon_blocks: 400 }
    }
}

fn invalid(reason: String) -> NetsimError {
    NetsimError::InvalidConfig(reason)
}

impl ScenarioConfig {
    /// Parses TOML; syntax errors carry a 1-based line and column.
    pub fn from_toml(text: &str) -> Result<ScenarioConfig, NetsimError> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
            NetsimError::Parse { line, column, message: e.message().to_string() }
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.participants.iter().position(|p| p.name == name)
    }

    fn need(&self, name: &str, what: &str) -> Result<usize, NetsimError> {
        self.index_of(name).ok_or_else(|| invalid(format!("{what}: unknown participant `{name}`")))
    }

    fn need_role(&self, name: &str, what: &str, ok: impl Fn(Role) -> bool) -> Result<usize, NetsimError> {
        let i = self.need(name, what)?;
        if !ok(self.participants[i].role) {
            return Err(invalid(format!("{what}: `{name}` has the wrong role")));
        }
        Ok(i)
    }

    /// Checks names, powers, times and references.
    pub fn validate(&self) -> Result<ChainParams, NetsimError> {
        let params = self.money.params()?;
        if self.participants.is_empty() {
            return Err(invalid("no participants".into()));
        }
        let mut names = BTreeSet::new();
        for p in &self.participants {
            if !names.insert(p.name.as_str()) {
                return Err(invalid(format!("duplicate participant `{}`", p.name)));
            }
            if !p.hash_power.is_finite() || p.hash_power < 0.0 {
                return Err(invalid(format!("`{}`: hash_power must be a non-negative number", p.name)));
            }
            if !p.role.mines() && p.hash_power != 0.0 {
                return Err(invalid(format!("`{}`: only miners and attackers have hash power", p.name)));
            }
            match (p.role, &p.service) {
                (Role::IndirectUser, Some(s)) => {
                    self.need_role(s, &p.name, |r| r == Role::ParticipationService)?;
                }
                (Role::IndirectUser, None) => {
                    return Err(invalid(format!("`{}`: indirect user without a service", p.name)));
                }
                (_, Some(_)) => return Err(invalid(format!("`{}`: only indirect users name a service", p.name))),
                _ => {}
            }
        }
        let power: f64 = self.participants.iter().map(|p| p.hash_power).sum();
        if power <= 0.0 && self.participants.iter().any(|p| p.role.mines()) {
            return Err(invalid("total hash power is zero".into()));
        }
        if !(self.mining.block_interval.is_finite() && self.mining.block_interval > 0.0) {
            return Err(invalid("block_interval must be positive".into()));
        }
        match &self.latency {
            Latency::Fixed { ticks } if ticks.is_negative() => return Err(invalid("negative latency".into())),
            Latency::Uniform { lo, hi } if lo.is_negative() || hi < lo => {
                return Err(invalid("latency needs 0 ≤ lo ≤ hi".into()))
            }
            _ => {}
        }
        if self.consensus.epsilon.is_negative() {
            return Err(invalid("negative epsilon".into()));
        }
        if self.setup.prefix_blocks > 0 {
            match &self.setup.prefix_miner {
                Some(n) => {
                    self.need_role(n, "prefix_miner", Role::holds_keys)?;
                }
                None if !self.participants.iter().any(|p| p.role.mines()) => {
                    return Err(invalid("prefix blocks need a miner".into()))
                }
                None => {}
            }
        }
        if let Some(t) = &self.stop.time {
            if t.is_negative() {
                return Err(invalid("negative stop time".into()));
            }
        }
        if self.stop.blocks.is_none() && self.stop.time.is_none() {
            return Err(invalid("stop needs blocks or time".into()));
        }
        let amount = |s: &str, what: &str| -> Result<Amount, NetsimError> {
            params.units(s).ok_or_else(|| invalid(format!("{what}: `{s}` is not an amount")))
        };
        for a in &self.actions {
            if a.at().is_negative() {
                return Err(invalid("action scheduled before time zero".into()));
            }
            match a {
                Action::Transfer { from, to, amount: v, fee, .. } => {
                    self.need_role(from, "transfer", Role::holds_keys)?;
                    self.need_role(to, "transfer", Role::holds_keys)?;
                    amount(v, "transfer")?;
                    if let Some(f) = fee {
                        amount(f, "transfer fee")?;
                    }
                }
                Action::Partition { at, groups, heal } => {
                    let mut seen = BTreeSet::new();
                    for g in groups {
                        for n in g {
                            self.need(n, "partition")?;
                            if !seen.insert(n.as_str()) {
                                return Err(invalid(format!("partition: overlapping groups at `{n}`")));
                            }
                        }
                    }
                    if let Some(h) = heal {
                        if h < at {
                            return Err(invalid("partition heals before it starts".into()));
                        }
                    }
                }
                Action::Deposit { service, user, from, amount: v, fee, .. } => {
                    self.need_role(service, "deposit", |r| r == Role::ParticipationService)?;
                    self.need_role(user, "deposit", |r| r == Role::IndirectUser)?;
                    self.need_role(from, "deposit", Role::holds_keys)?;
                    amount(v, "deposit")?;
                    if let Some(f) = fee {
                        amount(f, "deposit fee")?;
                    }
                }
                Action::Withdraw { service, user, to, amount: v, fee, .. } => {
                    self.need_role(service, "withdraw", |r| r == Role::ParticipationService)?;
                    self.need_role(user, "withdraw", |r| r == Role::IndirectUser)?;
                    self.need_role(to, "withdraw", Role::holds_keys)?;
                    amount(v, "withdraw")?;
                    if let Some(f) = fee {
                        amount(f, "withdraw fee")?;
                    }
                }
                Action::ClaimTransfer { service, from, to, amount: v, .. } => {
                    self.need_role(service, "claim-transfer", |r| r == Role::ParticipationService)?;
                    self.need_role(from, "claim-transfer", |r| r == Role::IndirectUser)?;
                    self.need_role(to, "claim-transfer", |r| r == Role::IndirectUser)?;
                    amount(v, "claim-transfer")?;
                }
                Action::DoubleSpend { attacker, victim, amount: v, .. } => {
                    self.need_role(attacker, "double-spend", |r| r == Role::Attacker)?;
                    self.need_role(victim, "double-spend", |r| r == Role::User || r == Role::Miner)?;
                    amount(v, "double-spend")?;
                }
                Action::MajorityRewrite { attacker, .. } => {
                    self.need_role(attacker, "majority-rewrite", |r| r == Role::Attacker)?;
                }
            }
        }
        if let Some(x) = &self.double_spend {
            if x.q.iter().any(|q| !(0.0..1.0).contains(q)) {
                return Err(invalid("double_spend: q must lie in [0, 1)".into()));
            }
            if x.runs == 0 {
                return Err(invalid("double_spend: runs must be positive".into()));
            }
        }
        Ok(params)
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn syntax_error_position() {
        let err = ScenarioConfig::from_toml("seed = 1\n[money\nprofile = 'desk'\n").unwrap_err();
        match err {
            NetsimError::Parse { line, column, .. } => assert_eq!((line, column), (2, 7)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn defaults_round_trip() {
        let text = r#"
            [[participants]]
            name = "m"
            role = "miner"
            hash_power = 1.0
        "#;
        let c = ScenarioConfig::from_toml(text).unwrap();
        assert_eq!(c.seed(), 0);
        assert_eq!(c.latency, Latency::default());
        c.validate().unwrap();
        assert_eq!(ScenarioConfig::from_toml(&c.to_toml()).unwrap(), c);
    }
}
