use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bitguilder_core::ledger::{read_dump, write_dump, Amount};
use bitguilder_core::numerics::Rat;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bitguilder"))
}

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn lines(o: &Output) -> Vec<Value> {
    stdout(o).lines().map(|l| serde_json::from_str(l).unwrap_or_else(|e| panic!("{l}: {e}"))).collect()
}

fn of_type<'a>(v: &'a [Value], t: &str) -> Vec<&'a Value> {
    v.iter().filter(|x| x["type"] == t).collect()
}

fn honest_run(dir: &Path) -> Vec<Value> {
    let o = run(&["run-scenario", example("honest.cfg").to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    lines(&o)
}

#[test]
fn honest_scenario_writes_outputs_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let out = honest_run(dir.path());
    let done = of_type(&out, "done")[0];
    assert_eq!(done["blocks"], 20);
    assert_eq!(done["trace_digest"].as_str().unwrap().len(), 64);
    let metrics = fs::read_to_string(dir.path().join("metrics.jsonl")).unwrap();
    assert!(metrics.lines().all(|l| serde_json::from_str::<Value>(l).is_ok()));

    let chain = dir.path().join("chain.dump");
    let cfg = dir.path().join("scenario.toml");
    let o = run(&["inspect-chain", chain.to_str().unwrap(), "--validate", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "OK, 20 blocks, total difficulty 20");
}

#[test]
fn same_seed_same_digest() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let da = of_type(&honest_run(a.path()), "done")[0]["trace_digest"].clone();
    let db = of_type(&honest_run(b.path()), "done")[0]["trace_digest"].clone();
    assert_eq!(da, db);
    assert_eq!(fs::read(a.path().join("chain.dump")).unwrap(), fs::read(b.path().join("chain.dump")).unwrap());
}

#[test]
fn seed_flag_overrides_and_missing_seed_defaults_to_zero() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(example("honest.cfg")).unwrap().replace("seed = 7\n", "");
    let cfg = dir.path().join("noseed.cfg");
    fs::write(&cfg, text).unwrap();
    let out = dir.path().join("o");
    let o = run(&["run-scenario", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let seed = &lines(&o)[0];
    assert_eq!((seed["seed"].as_u64(), seed["defaulted"].as_bool()), (Some(0), Some(true)));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed 0"));

    let o = run(&["run-scenario", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "9"]);
    let seed = &lines(&o)[0];
    assert_eq!((seed["seed"].as_u64(), seed["defaulted"].as_bool()), (Some(9), Some(false)));
}

#[test]
fn corrupt_config_exits_one_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "seed = 1\n[money\nprofile = \"desk\"\n").unwrap();
    let o = run(&["run-scenario", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2, column"), "{err}");

    fs::write(&cfg, "[[participants]]\nname = \"a\"\nrole = \"user\"\nhash_power = 0.5\n").unwrap();
    let o = run(&["run-scenario", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bundled_double_spend_config_reports_success_rates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = example("double_spend.cfg");
    let args = ["run-scenario", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()];
    let o = run(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = lines(&o);
    let points = of_type(&out, "double-spend");
    assert_eq!(points.len(), 21);
    for p in &points {
        let r = p["success_rate"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&r));
    }
    let at = |q: f64, k: u64| {
        points.iter().find(|p| p["q"].as_f64() == Some(q) && p["k_c"] == k).unwrap()["success_rate"].as_f64().unwrap()
    };
    assert!(at(0.3, 0) > at(0.3, 6));
    assert_eq!(of_type(&out, "decay-fit").len(), 3);

    let mut par = args.to_vec();
    par.extend(["--parallel", "3"]);
    let again = lines(&run(&par));
    assert_eq!(of_type(&again, "done")[0]["trace_digest"], of_type(&out, "done")[0]["trace_digest"]);
}

#[test]
fn tampered_fee_names_condition_d() {
    let dir = tempfile::tempdir().unwrap();
    honest_run(dir.path());
    let chain = dir.path().join("chain.dump");
    let mut blocks = read_dump(&fs::read(&chain).unwrap()).unwrap();
    let last = blocks.last_mut().unwrap();
    last.step.g = Amount(last.step.g.0 + 1);
    let mut bytes = Vec::new();
    write_dump(&mut bytes, &blocks).unwrap();
    let bad = dir.path().join("bad.dump");
    fs::write(&bad, bytes).unwrap();
    let cfg = dir.path().join("scenario.toml");
    let o = run(&["inspect-chain", bad.to_str().unwrap(), "--validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("condition (d)"), "{}", stdout(&o));
}

#[test]
fn empty_dump_is_missing_genesis() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.dump");
    fs::write(&empty, b"").unwrap();
    for extra in [&[][..], &["--validate"][..]] {
        let mut args = vec!["inspect-chain", empty.to_str().unwrap()];
        args.extend(extra);
        let o = run(&args);
        assert_eq!(o.status.code(), Some(1));
        assert!(String::from_utf8_lossy(&o.stderr).contains("genesis missing"));
    }
}

#[test]
fn eval_prints_meadow_values() {
    let o = run(&["eval", "1/0"]);
    assert!(o.status.success());
    assert_eq!(lines(&o)[0]["value"], "0");
    let o = run(&["eval", "(3 + 1/2) * 2"]);
    assert_eq!(lines(&o)[0]["value"], "7");
    assert_eq!(run(&["eval", "1 +"]).status.code(), Some(1));
    assert_eq!(run(&["eval", "x"]).status.code(), Some(1));
}

#[test]
fn eval_with_units_from_env_file() {
    let dir = tempfile::tempdir().unwrap();
    let env = dir.path().join("env.toml");
    fs::write(&env, "q = \"12 BGU\"\nt = \"4 U\"\n").unwrap();
    let o = run(&["eval", "q / t", "--env", env.to_str().unwrap()]);
    let v = &lines(&o)[0];
    assert_eq!((v["value"].as_str(), v["unit"].as_str()), (Some("3"), Some("BGU/U")));
    assert_eq!(run(&["eval", "q + t", "--env", env.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn wealth_report_and_taxation_cross_check() {
    let dir = tempfile::tempdir().unwrap();
    honest_run(dir.path());
    let chain = dir.path().join("chain.dump");
    let cfg = dir.path().join("scenario.toml");
    let o = run(&["inspect-chain", chain.to_str().unwrap(), "--config", cfg.to_str().unwrap()]);
    let miner = of_type(&lines(&o), "block")[5]["miner"].as_str().unwrap().to_string();

    let access = dir.path().join("access.toml");
    fs::write(
        &access,
        format!("t = \"100\"\n[[access]]\nagent = \"P\"\naddress = \"{miner}\"\n[[access]]\nagent = \"Q\"\naddress = \"{miner}\"\n"),
    )
    .unwrap();
    let wealth = |agent: &str| {
        let o = run(&[
            "wealth",
            chain.to_str().unwrap(),
            "--access",
            access.to_str().unwrap(),
            "--agent",
            agent,
            "--config",
            cfg.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        lines(&o)
    };
    let p = wealth("P");
    let q = wealth("Q");
    let w1: Rat = p[0]["value"].as_str().unwrap().parse().unwrap();
    assert_eq!(p[0]["unit"], "BGUA");
    assert_eq!(p[0]["value"], q[0]["value"]);
    assert!(w1 > Rat::zero());
    assert_eq!(p[1]["unit"], "FBGU");

    let env = dir.path().join("env.toml");
    fs::write(&env, format!("w = \"{w1} BGUA\"\nrate = \"1/100 FBGU/BGUA\"\n")).unwrap();
    let o = run(&["eval", "w * rate", "--env", env.to_str().unwrap()]);
    let v = &lines(&o)[0];
    assert_eq!(v["value"], p[1]["value"]);
    assert_eq!(v["unit"], "FBGU");
}
