use rayon::prelude::*;
use serde::Serialize;

use super::config::{
    Action, ConsensusConfig, DoubleSpendExperiment, Latency, MetricsConfig, MiningConfig, MoneyConfig, ParticipantConfig,
    Role, ScenarioConfig, SetupConfig, StopCondition,
};
use super::stats::{linear_fit, wilson_interval};
use super::{run, NetsimError};
use crate::crypto::SignatureScheme;
use crate::numerics::Rat;

fn participant(name: &str, role: Role, hash_power: f64) -> ParticipantConfig {
    ParticipantConfig { name: name.into(), role, hash_power, service: None, isolated_constructor: true }
}

/// Cheap chain settings for large batches: base difficulty one and the
/// null signer.
fn batch_money() -> MoneyConfig {
    MoneyConfig { difficulty: Some(1), signature: Some(SignatureScheme::Null), ..MoneyConfig::default() }
}

fn quiet_metrics() -> MetricsConfig {
    MetricsConfig { track_forks: false, supply_samples: false }
}

/// One honest miner with `1 - q`, the attacker with `q`, and the victim.
/// The attacker owns the only block before time zero and pays the victim
/// at once.
pub fn double_spend_config(q: f64, k_c: u64, seed: u64, give_up: u64, horizon_blocks: u64) -> ScenarioConfig {
    ScenarioConfig {
        seed: Some(seed),
        money: batch_money(),
        consensus: ConsensusConfig::default(),
        latency: Latency::default(),
        mining: MiningConfig::default(),
        setup: SetupConfig { prefix_blocks: 1, prefix_miner: Some("attacker".into()) },
        participants: vec![
            participant("honest", Role::Miner, 1.0 - q),
            participant("attacker", Role::Attacker, q),
            participant("victim", Role::User, 0.0),
        ],
        actions: vec![Action::DoubleSpend {
            at: Rat::zero(),
            attacker: "attacker".into(),
            victim: "victim".into(),
            amount: "10".into(),
            k_c,
            give_up,
        }],
        stop: StopCondition { blocks: Some(horizon_blocks), ..StopCondition::default() },
        metrics: quiet_metrics(),
        double_spend: None,
    }
}

/// True when the attacker's branch replaced the victim's chain after the
/// victim acted.
pub fn double_spend_attack(q: f64, k_c: u64, seed: u64, give_up: u64, horizon_blocks: u64) -> Result<bool, NetsimError> {
    let out = run(&double_spend_config(q, k_c, seed, give_up, horizon_blocks))?;
    Ok(out.metrics.attacks.first().is_some_and(|a| a.success))
}

/// Seed of run `index` derived from a base seed; the same for every point
/// of a sweep.
pub fn run_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub q: f64,
    pub k_c: u64,
    pub runs: u64,
    pub successes: u64,
    pub success_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Monte Carlo over every `(q, k_c)` of the experiment. `parallel` caps the
/// worker threads; results do not depend on it.
pub fn double_spend_sweep(x: &DoubleSpendExperiment, base_seed: u64, parallel: usize) -> Result<Vec<SweepPoint>, NetsimError> {
    let tasks: Vec<(usize, usize, u64)> = (0..x.q.len())
        .flat_map(|qi| (0..x.k_c.len()).flat_map(move |ki| (0..x.runs).map(move |r| (qi, ki, r))))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel.max(1))
        .build()
        .map_err(|e| NetsimError::Runtime(e.to_string()))?;
    let outcomes: Vec<Result<bool, NetsimError>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(qi, ki, r)| double_spend_attack(x.q[qi], x.k_c[ki], run_seed(base_seed, r), x.give_up, x.horizon_blocks))
            .collect()
    });
    let mut counts = vec![vec![0u64; x.k_c.len()]; x.q.len()];
    for (&(qi, ki, _), o) in tasks.iter().zip(outcomes) {
        counts[qi][ki] += o? as u64;
    }
    let mut points = Vec::new();
    for (qi, &q) in x.q.iter().enumerate() {
        for (ki, &k_c) in x.k_c.iter().enumerate() {
            let s = counts[qi][ki];
            let (ci_low, ci_high) = wilson_interval(s, x.runs);
            points.push(SweepPoint {
                q,
                k_c,
                runs: x.runs,
                successes: s,
                success_rate: s as f64 / x.runs as f64,
                ci_low,
                ci_high,
            });
        }
    }
    Ok(points)
}

/// Shape of the success rate in `k_c` for one attacker power.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub q: f64,
    pub monotone: bool,
    /// Slope of `ln(rate)` against `k_c`; `None` if some rate is zero.
    pub slope: Option<f64>,
    pub r_squared: Option<f64>,
    /// Pairs `(k_c, k_c + 2)` whose confidence intervals overlap.
    pub overlapping: Vec<(u64, u64)>,
}

pub fn decay_fits(points: &[SweepPoint]) -> Vec<DecayFit> {
    let mut qs: Vec<f64> = points.iter().map(|p| p.q).collect();
    qs.dedup();
    qs.into_iter()
        .map(|q| {
            let mut pts: Vec<&SweepPoint> = points.iter().filter(|p| p.q == q).collect();
            pts.sort_by_key(|p| p.k_c);
            let monotone = pts.windows(2).all(|w| w[1].success_rate <= w[0].success_rate);
            let logs: Option<Vec<(f64, f64)>> =
                pts.iter().map(|p| (p.successes > 0).then(|| (p.k_c as f64, p.success_rate.ln()))).collect();
            let fit = logs.and_then(|l| linear_fit(&l));
            let overlapping = pts
                .iter()
                .flat_map(|a| pts.iter().filter(move |b| b.k_c == a.k_c + 2).map(move |b| (a, b)))
                .filter(|(a, b)| b.ci_high >= a.ci_low)
                .map(|(a, b)| (a.k_c, b.k_c))
                .collect();
            DecayFit { q, monotone, slope: fit.map(|f| f.0), r_squared: fit.map(|f| f.2), overlapping }
        })
        .collect()
}

/// Honest miner with `1 - q` built `prefix` blocks; the attacker forks
/// `depth` blocks below the tip at time zero. An observer only watches.
pub fn majority_rewrite_config(q: f64, depth: u64, seed: u64, prefix: u64, horizon_blocks: u64) -> ScenarioConfig {
    ScenarioConfig {
        seed: Some(seed),
        money: batch_money(),
        consensus: ConsensusConfig::default(),
        latency: Latency::default(),
        mining: MiningConfig::default(),
        setup: SetupConfig { prefix_blocks: prefix, prefix_miner: Some("honest".into()) },
        participants: vec![
            participant("honest", Role::Miner, 1.0 - q),
            participant("attacker", Role::Attacker, q),
            participant("observer", Role::User, 0.0),
        ],
        actions: vec![Action::MajorityRewrite { at: Rat::zero(), attacker: "attacker".into(), depth }],
        stop: StopCondition { blocks: Some(prefix + horizon_blocks), ..StopCondition::default() },
        metrics: quiet_metrics(),
        double_spend: None,
    }
}

pub fn majority_rewrite(q: f64, depth: u64, seed: u64, horizon_blocks: u64) -> Result<bool, NetsimError> {
    let out = run(&majority_rewrite_config(q, depth, seed, depth + 5, horizon_blocks))?;
    Ok(out.metrics.attacks.first().is_some_and(|a| a.success))
}
