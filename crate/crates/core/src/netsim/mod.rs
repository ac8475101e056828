//! Discrete-event simulation of participants exchanging transactions and
//! blocks over a lossy, delayed network.

mod attack;
mod config;
mod metrics;
mod node;
mod queue;
mod service;
mod sim;
pub mod stats;

use thiserror::Error;

pub use attack::{
    decay_fits, double_spend_attack, double_spend_config, double_spend_sweep, majority_rewrite, majority_rewrite_config,
    run_seed, DecayFit, SweepPoint,
};
pub use config::{
    Action, ConsensusConfig, DoubleSpendExperiment, Latency, MetricsConfig, MiningConfig, MiningMode, MoneyConfig,
    ParticipantConfig, Role, ScenarioConfig, SetupConfig, StopCondition,
};
pub use metrics::{AttackOutcome, ForkEpisode, Metrics, ServiceEvent, SupplySample, TxLatency};
pub use node::{Node, TransferOrder, Wallet};
pub use queue::{Event, EventQueue};
pub use service::{ParticipationService, ServiceError};
pub use sim::{run, RunOutput, Sim};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetsimError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("config syntax at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("simulation failed: {0}")]
    Runtime(String),
}
