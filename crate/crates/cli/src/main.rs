//! `bitguilder`: batch scenario runner and inspection tools.
//!
//! Every subcommand prints JSON lines on stdout, one object per line with a
//! `type` field. Exit codes: 0 success, 1 invalid input, 2 runtime failure.

mod wealth;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bitguilder_core::crypto::HashAlg;
use bitguilder_core::ledger::{read_dump, replay, summarize, write_dump, ChainParams, DumpError};
use bitguilder_core::netsim::{self, decay_fits, double_spend_sweep, NetsimError, ScenarioConfig};
use bitguilder_core::numerics::{eval_expr, parse_expr, Env, Quantity};
use clap::{Parser, Subcommand};
use serde_json::json;

#[derive(Parser)]
#[command(name = "bitguilder", version, about = "Simulate and inspect informational-money ledgers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write metrics, the chain dump and the trace digest.
    RunScenario {
        config: PathBuf,
        /// Overrides the config seed; without either the seed is 0.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads for Monte Carlo sweeps.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
    },
    /// Summarize a chain dump, or validate it from genesis.
    InspectChain {
        dump: PathBuf,
        #[arg(long)]
        validate: bool,
        /// Scenario config whose money section gives the chain parameters.
        #[arg(long, conflicts_with = "profile")]
        config: Option<PathBuf>,
        #[arg(long, default_value = "desk")]
        profile: String,
    },
    /// Evaluate a meadow expression with units.
    Eval {
        expr: String,
        /// TOML table of `name = "value unit"` bindings.
        #[arg(long)]
        env: Option<PathBuf>,
    },
    /// Wealth and taxation of one agent over a chain dump and an access file.
    Wealth {
        dump: PathBuf,
        #[arg(long)]
        access: PathBuf,
        #[arg(long)]
        agent: String,
        #[arg(long, conflicts_with = "profile")]
        config: Option<PathBuf>,
        #[arg(long, default_value = "desk")]
        profile: String,
    },
}

pub enum Failure {
    Input(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }
}

impl From<NetsimError> for Failure {
    fn from(e: NetsimError) -> Self {
        match e {
            NetsimError::Runtime(_) => Failure::Runtime(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

pub type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::RunScenario { config, seed, out, parallel } => run_scenario(&config, seed, &out, parallel),
        Command::InspectChain { dump, validate, config, profile } => inspect_chain(&dump, validate, config.as_deref(), &profile),
        Command::Eval { expr, env } => eval(&expr, env.as_deref()),
        Command::Wealth { dump, access, agent, config, profile } => {
            chain_params(config.as_deref(), &profile).and_then(|p| wealth::report(&dump, &access, &agent, &p))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Input(msg) | Failure::Runtime(msg)) = &f;
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}

pub fn read_input(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    String::from_utf8(read_input(path)?).map_err(|_| Failure::Input(format!("{}: not UTF-8", path.display())))
}

fn load_config(path: &Path) -> Result<ScenarioConfig, Failure> {
    ScenarioConfig::from_toml(&read_text(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn chain_params(config: Option<&Path>, profile: &str) -> Result<ChainParams, Failure> {
    match config {
        Some(p) => Ok(load_config(p)?.money.params()?),
        None => ChainParams::by_name(profile).ok_or_else(|| Failure::Input(format!("unknown profile `{profile}`"))),
    }
}

fn write_out(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn run_scenario(path: &Path, seed: Option<u64>, out: &Path, parallel: usize) -> Outcome {
    let mut cfg = load_config(path)?;
    let defaulted = seed.is_none() && cfg.seed.is_none();
    if let Some(s) = seed {
        cfg.seed = Some(s);
    }
    let seed = cfg.seed();
    cfg.validate()?;
    if defaulted {
        eprintln!("note: no seed given, using seed 0");
    }
    println!("{}", json!({"type": "seed", "seed": seed, "defaulted": defaulted}));
    write_out(out, "scenario.toml", cfg.to_toml().as_bytes())?;

    if let Some(x) = &cfg.double_spend {
        let points = double_spend_sweep(x, seed, parallel)?;
        let mut lines = String::new();
        for p in &points {
            let mut v = serde_json::to_value(p).expect("sweep point serializes");
            v["type"] = json!("double-spend");
            lines.push_str(&format!("{v}\n"));
        }
        for f in decay_fits(&points) {
            let mut v = serde_json::to_value(&f).expect("fit serializes");
            v["type"] = json!("decay-fit");
            lines.push_str(&format!("{v}\n"));
        }
        let metrics = write_out(out, "metrics.jsonl", lines.as_bytes())?;
        print!("{lines}");
        let digest = HashAlg::Sha256.digest(lines.as_bytes()).to_hex();
        println!("{}", json!({"type": "done", "metrics": metrics, "trace_digest": digest}));
        return Ok(());
    }

    let run = netsim::run(&cfg)?;
    let metrics = write_out(out, "metrics.jsonl", run.metrics.json_lines().as_bytes())?;
    let (name, view) = run
        .names
        .iter()
        .zip(&run.views)
        .max_by(|a, b| a.1.total_difficulty().cmp(&b.1.total_difficulty()).then(b.0.cmp(a.0)))
        .expect("validated config has participants");
    if !view.state().conservation_holds() {
        return Err(Failure::Runtime(format!("conservation violated in the view of `{name}`")));
    }
    let mut dump = Vec::new();
    write_dump(&mut dump, view.blocks()).expect("in-memory write");
    let chain = write_out(out, "chain.dump", &dump)?;
    println!(
        "{}",
        json!({
            "type": "done",
            "events": run.events,
            "end_time": run.end_time,
            "chain_of": name,
            "blocks": view.len(),
            "total_difficulty": view.total_difficulty().to_string(),
            "metrics": metrics,
            "chain": chain,
            "trace_digest": run.trace_digest,
        })
    );
    Ok(())
}

fn inspect_chain(path: &Path, validate: bool, config: Option<&Path>, profile: &str) -> Outcome {
    let params = chain_params(config, profile)?;
    let data = read_input(path)?;
    let blocks = read_dump(&data).map_err(|e| Failure::Input(e.to_string()))?;
    if !validate {
        if blocks.is_empty() {
            return Err(Failure::Input(DumpError::GenesisMissing.to_string()));
        }
        for b in &blocks {
            let mut v = serde_json::to_value(summarize(b, &params)).expect("summary serializes");
            v["type"] = json!("block");
            println!("{v}");
        }
        let d: u128 = blocks.iter().map(|b| b.step.m as u128).sum();
        println!("{}", json!({"type": "summary", "blocks": blocks.len(), "total_difficulty": d.to_string()}));
        return Ok(());
    }
    match replay(&blocks, &params) {
        Ok(r) => {
            println!("OK, {} blocks, total difficulty {}", r.blocks, r.total_difficulty);
            Ok(())
        }
        Err(DumpError::Invalid { index, condition, source }) => {
            println!("INVALID, block {index} violates condition {condition}: {source}");
            Err(Failure::Runtime(format!("block {index} violates condition {condition}")))
        }
        Err(e) => Err(Failure::Input(e.to_string())),
    }
}

fn load_env(path: &Path) -> Result<Env, Failure> {
    let table: toml::Table = toml::from_str(&read_text(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let mut env = Env::new();
    for (name, v) in table {
        let text = match v {
            toml::Value::String(s) => s,
            toml::Value::Integer(i) => i.to_string(),
            other => return Err(Failure::Input(format!("`{name}`: expected a string or integer, got {other}"))),
        };
        let q: Quantity = text.parse().map_err(|e| Failure::Input(format!("`{name}`: {e}")))?;
        env.insert(name, q);
    }
    Ok(env)
}

fn eval(expr: &str, env: Option<&Path>) -> Outcome {
    let env = env.map(load_env).transpose()?.unwrap_or_default();
    let e = parse_expr(expr).map_err(|e| Failure::Input(e.to_string()))?;
    let q = eval_expr(&e, &env).map_err(|e| Failure::Input(e.to_string()))?;
    println!("{}", json!({"type": "value", "value": q.value, "unit": q.dim.to_string(), "text": q.to_string()}));
    Ok(())
}
