use std::path::Path;

use bitguilder_core::accounting::{holdings_of, taxation, wealth1, wealth2, AccessRelation, Assertion, WealthRow};
use bitguilder_core::crypto::Address;
use bitguilder_core::ledger::{read_dump, replay, ChainParams};
use bitguilder_core::numerics::Rat;
use serde::Deserialize;
use serde_json::json;

use crate::{read_input, Failure, Outcome};

/// Access file: plain pairs for `wealth1`, raw assertions for `wealth2`.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AccessFile {
    t: Rat,
    #[serde(default)]
    access: Vec<Pair>,
    #[serde(default)]
    assertions: Vec<Assertion>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Pair {
    agent: String,
    address: Address,
}

pub fn report(dump: &Path, access: &Path, agent: &str, params: &ChainParams) -> Outcome {
    let text = String::from_utf8(read_input(access)?).map_err(|_| Failure::Input("access file is not UTF-8".into()))?;
    let file: AccessFile = toml::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", access.display())))?;
    let blocks = read_dump(&read_input(dump)?).map_err(|e| Failure::Input(e.to_string()))?;
    let state = replay(&blocks, params).map_err(|e| Failure::Runtime(e.to_string()))?.state;
    let holdings = holdings_of(&state, params.quantum_decimals);

    let rel = AccessRelation::from_pairs(file.access.iter().map(|p| (p.agent.as_str(), p.address)));
    let mut rows = vec![
        WealthRow::new(agent, &file.t, &wealth1(agent, &holdings, &rel)),
        WealthRow::new(agent, &file.t, &taxation(agent, &holdings, &rel)),
    ];
    if !file.assertions.is_empty() {
        rows.push(WealthRow::new(agent, &file.t, &wealth2(agent, &holdings, &file.assertions, &file.t, params.signature)));
    }
    for (kind, row) in ["wealth1", "taxation", "wealth2"].iter().zip(&rows) {
        let mut v = serde_json::to_value(row).expect("row serializes");
        v["type"] = json!(kind);
        println!("{v}");
    }
    Ok(())
}
