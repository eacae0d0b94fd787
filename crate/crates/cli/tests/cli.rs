use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_datacheck"));
    c.env("NO_COLOR", "1");
    c
}

fn model(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../models")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn witness_exits_zero() {
    let o = run(&["verify", &model("b1.dds"), "--prop", "F (y > 5)"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("verdict: witness"), "{}", s);
    assert!(s.contains("strategy: MC"), "{}", s);
    assert!(!s.contains('\x1b'));
}

#[test]
fn no_witness_exits_one() {
    let o = run(&["verify", &model("b1.dds"), "--prop", "F (y > 5 & y < 0)"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("verdict: no witness"));
}

#[test]
fn inconclusive_exits_two() {
    let o = run(&["verify", &model("b3.dds"), "--prop", "F (x >= 5)", "--max-nodes", "1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
}

#[test]
fn usage_and_parse_errors_exit_three() {
    assert_eq!(run(&["verify"]).status.code(), Some(3));
    assert_eq!(run(&["verify", "missing.dds", "--prop", "true"]).status.code(), Some(3));
    let o = run(&["verify", &model("b1.dds"), "--prop", "F ("]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
    assert_eq!(run(&["verify", &model("b1.dds"), "--prop", "F (zz > 1)"]).status.code(), Some(3));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(3));
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn json_output() {
    let o = run(&["verify", &model("b1.dds"), "--prop", "F (y > 5)", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["verdict"], "witness");
    assert_eq!(v["strategy"], "MC");
    assert_eq!(v["product_nodes"], 9);
    let run = v["run"].as_array().unwrap();
    assert_eq!(run.len(), v["actions"].as_array().unwrap().len() + 1);
    assert_eq!(run[0]["assign"]["x"], "0/1");
    assert_eq!(run.last().unwrap()["state"], "2");
}

#[test]
fn property_from_file_and_dot_output() {
    let dir = tempfile::tempdir().unwrap();
    let prop = dir.path().join("p.ltl");
    std::fs::write(&prop, "F (y > 5)\n").unwrap();
    let (cg, nfa, prod) = (dir.path().join("cg.dot"), dir.path().join("nfa.dot"), dir.path().join("p.dot"));
    let o = bin()
        .arg("verify")
        .arg(model("b1.dds"))
        .arg("--prop")
        .arg(&prop)
        .arg("--dot-cg")
        .arg(&cg)
        .arg("--dot-nfa")
        .arg(&nfa)
        .arg("--dot-product")
        .arg(&prod)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for (f, head) in [(&cg, "digraph constraint_graph"), (&nfa, "digraph nfa"), (&prod, "digraph product")] {
        let s = std::fs::read_to_string(f).unwrap();
        assert!(s.starts_with(head), "{}", s);
    }
}

#[test]
fn summary_reports_strategy() {
    let o = run(&["summary", &model("b4.dds")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("BoundedLookback"));
    let o = run(&["summary", &model("auction.dds"), "--prop", "F (sold & b = 0)"]);
    assert!(stdout(&o).contains("VarCompose"), "{}", stdout(&o));
}

#[test]
fn auction_verdicts() {
    let props = std::fs::read_to_string(model("auction.props")).unwrap();
    let codes: Vec<Option<i32>> = props
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|p| run(&["verify", &model("auction.dds"), "--prop", p]).status.code())
        .collect();
    assert_eq!(codes, [Some(1), Some(0), Some(1), Some(0), Some(1)]);
}

#[test]
fn oracle_agrees_on_b1() {
    let o = run(&["oracle", &model("b1.dds"), "--prop", "F (y > 5)", "--max-len", "3", "--grid", "0", "8"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}
