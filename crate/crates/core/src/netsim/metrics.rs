use std::collections::BTreeMap;

use serde::Serialize;

use crate::consensus::ForkRecord;
use crate::ledger::Amount;
use crate::numerics::Rat;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TxLatency {
    pub tx: String,
    pub from: String,
    pub submitted: Rat,
    /// First time the transaction was in the sender's own chain.
    pub confirmed: Option<Rat>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForkEpisode {
    pub start: Rat,
    pub end: Option<Rat>,
    pub max_tips: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackOutcome {
    pub kind: String,
    pub attacker: String,
    pub k_c: Option<u64>,
    pub success: bool,
    pub started: Rat,
    pub victim_acted: Option<Rat>,
    pub resolved: Rat,
    /// Blocks the attacker mined on its branch.
    pub private_blocks: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupplySample {
    pub time: Rat,
    pub height: u64,
    pub minted: Amount,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServiceEvent {
    pub time: Rat,
    pub service: String,
    pub op: String,
    pub user: Option<String>,
    pub amount: Amount,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Metrics {
    pub tx_latency: Vec<TxLatency>,
    pub forks: Vec<ForkEpisode>,
    pub fork_reports: Vec<ForkRecord>,
    pub attacks: Vec<AttackOutcome>,
    pub supply: Vec<SupplySample>,
    /// Fees plus new coin per miner, over the first honest participant's chain.
    pub miner_earnings: BTreeMap<String, Amount>,
    pub blocks_won: BTreeMap<String, u64>,
    pub service_events: Vec<ServiceEvent>,
    pub invalid_blocks: u64,
    pub checkpoint_rejections: u64,
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
enum Line<'a> {
    Tx(&'a TxLatency),
    Fork(&'a ForkEpisode),
    ForkReport(&'a ForkRecord),
    Attack(&'a AttackOutcome),
    Supply(&'a SupplySample),
    Service(&'a ServiceEvent),
    Miner { name: &'a str, blocks: u64, earnings: Amount },
    Counters { invalid_blocks: u64, checkpoint_rejections: u64 },
}

impl Metrics {
    /// One JSON object per line, each tagged with a `type` field.
    pub fn json_lines(&self) -> String {
        let mut lines = Vec::new();
        lines.extend(self.tx_latency.iter().map(Line::Tx));
        lines.extend(self.forks.iter().map(Line::Fork));
        lines.extend(self.fork_reports.iter().map(Line::ForkReport));
        lines.extend(self.attacks.iter().map(Line::Attack));
        lines.extend(self.supply.iter().map(Line::Supply));
        lines.extend(self.service_events.iter().map(Line::Service));
        for (name, blocks) in &self.blocks_won {
            let earnings = self.miner_earnings.get(name).copied().unwrap_or_default();
            lines.push(Line::Miner { name, blocks: *blocks, earnings });
        }
        lines.push(Line::Counters { invalid_blocks: self.invalid_blocks, checkpoint_rejections: self.checkpoint_rejections });
        let mut out = String::new();
        for l in lines {
            out.push_str(&serde_json::to_string(&l).expect("metrics serialize"));
            out.push('\n');
        }
        out
    }
}
