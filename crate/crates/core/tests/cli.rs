use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anonelect")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn write_line(dir: &Path) -> String {
    let p = dir.join("line3.plg");
    std::fs::write(&p, "plg 1\nnodes 3\nedge 0 0 1 0\nedge 1 1 2 0\n").unwrap();
    p.display().to_string()
}

#[test]
fn elect_line_bruteforce() {
    let dir = tempfile::tempdir().unwrap();
    let line = write_line(dir.path());
    let out = cli(&["elect", "--graph", &line, "--task", "cppe", "--scheme", "bruteforce", "--deterministic"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["result"]["leader"], 1);
    assert_eq!(v["result"]["k"], 1);
    assert_eq!(v["result"]["valid"], true);
}

#[test]
fn deterministic_output_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let line = write_line(dir.path());
    let args = ["index", "--graph", &line, "--deterministic"];
    let (a, b) = (cli(&args), cli(&args));
    assert_eq!(a.stdout, b.stdout);
    assert!(json(&a).get("timestamp").is_none());
    assert_eq!(json(&a)["result"]["hierarchy_holds"], true);
    assert!(json(&cli(&["index", "--graph", &line])).get("timestamp").is_some());
}

#[test]
fn counts_and_budgets() {
    let v = json(&cli(&["count", "--family", "u", "--delta", "4", "--k", "1"]));
    assert_eq!(v["result"]["count"], 19683);
    let v = json(&cli(&["budget", "--family", "u", "--delta", "4", "--k", "1"]));
    assert_eq!(v["result"]["budget_bits"], 14);
    let v = json(&cli(&["count", "--family", "j", "--mu", "2", "--k", "4"]));
    assert_eq!(v["result"]["count"].as_str().unwrap().len(), 155);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(cli(&["count", "--family", "u", "--delta", "4"]).status.code(), Some(2));
    assert_eq!(cli(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(cli(&["classes", "--graph", "/nonexistent.plg", "--depth", "1"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let line = write_line(dir.path());
    assert_eq!(cli(&["elect", "--graph", &line, "--task", "pe", "--scheme", "selection"]).status.code(), Some(2));
}

#[test]
fn infeasible_graph_fails_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("pair.plg");
    std::fs::write(&p, "plg 1\nnodes 2\nedge 0 0 1 0\n").unwrap();
    let out = cli(&["index", "--graph", p.to_str().unwrap(), "--task", "s"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not feasible"));
}

#[test]
fn gen_views_classes_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.plg");
    let side = dir.path().join("g.json");
    let gs = g.to_str().unwrap();
    let out = cli(&["gen", "--family", "g", "--delta", "3", "--k", "2", "--i", "3", "--out", gs, "--sidecar", side.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let sidecar: Value = serde_json::from_str(&std::fs::read_to_string(&side).unwrap()).unwrap();
    let nodes = json(&out)["result"]["nodes"].as_u64().unwrap();
    let classes = json(&cli(&["classes", "--graph", gs, "--depth", "2"]));
    assert_eq!(classes["result"]["classes"].as_array().unwrap().len() as u64, nodes);
    let root = sidecar["roots"].as_array().unwrap().iter().find(|r| r["j"] == 3 && r["b"] == 2).unwrap()["node"].clone();
    assert_eq!(classes["result"]["singletons"], Value::Array(vec![root.clone()]));
    let views = json(&cli(&["views", "--graph", gs, "--depth", "1", "--node", &root.to_string()]));
    assert_eq!(views["result"]["views"][0]["degree"], 3);

    let r = dir.path().join("r.plg");
    let rs = r.to_str().unwrap();
    let a = cli(&["gen", "--family", "random", "--n", "12", "--seed", "5", "--out", rs, "--deterministic"]);
    let first = std::fs::read(&r).unwrap();
    cli(&["gen", "--family", "random", "--n", "12", "--seed", "5", "--out", rs]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(std::fs::read(&r).unwrap(), first);
}

#[test]
fn selection_scheme_writes_advice() {
    let dir = tempfile::tempdir().unwrap();
    let line = write_line(dir.path());
    let adv = dir.path().join("a.bin");
    let out = cli(&["elect", "--graph", &line, "--task", "s", "--scheme", "selection", "--advice-out", adv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let bytes = std::fs::read(&adv).unwrap();
    let a = anonelect::advice::Advice::from_file_bytes(&bytes).unwrap();
    assert_eq!(a.as_bytes(), &[0x01, 0x00, 0x02]);
    assert_eq!(json(&out)["result"]["advice_bits"], 24);
}

#[test]
fn verify_and_fool() {
    let out = cli(&["verify", "--family", "u", "--delta", "4", "--k", "1", "--fooling-j", "2", "--deterministic"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = cli(&["verify", "--family", "g", "--delta", "3", "--k", "2", "--i", "2,3,4"]);
    assert_eq!(out.status.code(), Some(0));
    // G_1 carries singletons besides r_(1,2): reported as a failed check, exit 1
    let out = cli(&["verify", "--family", "g", "--delta", "3", "--k", "1", "--i", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["result"]["failed_check"], "unique-depth-k-node");
    let out = cli(&["fool", "--family", "u", "--oracle", "constant:1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["result"]["shared_advice"], "1");
    assert_eq!(cli(&["fool", "--family", "g", "--oracle", "hash:64"]).status.code(), Some(1));
}

#[test]
fn verify_family_j() {
    let out = cli(&["verify", "--family", "j", "--mu", "2", "--k", "4", "--lemmas", "rho-sym,twin,cppe", "--y", "zeros"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let passed = &json(&out)["result"]["reports"][0]["passed"];
    assert_eq!(passed.as_array().unwrap().len(), 4);
}
