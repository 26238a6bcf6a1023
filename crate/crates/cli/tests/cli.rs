use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/four_regions.toml")
}

fn nsctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nsctl")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn translate_writes_automaton_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = nsctl(&["translate", scenario().to_str().unwrap(), "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("4 states, 5 transitions (4 after pruning)"));
    for f in ["dfa.dot", "dfa_pruned.dot", "dfa.json"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let dot = std::fs::read_to_string(dir.path().join("dfa.dot")).unwrap();
    assert!(dot.starts_with("digraph"));

    let o = nsctl(&["translate", scenario().to_str().unwrap(), "--formula", "F l1", "--out", out]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("2 states"), "{}", stdout(&o));
}

#[test]
fn verify_then_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("verify");
    let o = nsctl(&["verify", scenario().to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("True: [xi3 (H=6), xi1 (H=7)]"), "{}", stdout(&o));
    let report = json(&out.join("report.json"));
    assert_eq!(report["verdict"], true);
    assert_eq!(report["strategy"]["segments"].as_array().unwrap().len(), 2);
    assert!(out.join("reach_strategy.svg").is_file());
    assert!(out.join("timings.json").is_file());

    let sim = dir.path().join("sim");
    let o = nsctl(&[
        "simulate",
        scenario().to_str().unwrap(),
        "--strategy",
        out.join("report.json").to_str().unwrap(),
        "--n",
        "200",
        "--out",
        sim.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&sim.join("simulate.json"));
    assert_eq!(r["rollouts"], 200);
    assert!(r["fraction"].as_f64().unwrap() >= r["lower_band"].as_f64().unwrap());
    let traces = std::fs::read_to_string(sim.join("traces.csv")).unwrap();
    assert!(traces.lines().count() > 200);
}

#[test]
fn large_padding_exits_with_false() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = nsctl(&["verify", scenario().to_str().unwrap(), "--out", out, "--eps", "0.1"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.starts_with("False"));
    assert!(text.contains("avoid-violation"), "{text}");
    assert_eq!(json(&dir.path().join("report.json"))["strategy"], serde_json::Value::Null);

    // a report without a strategy cannot be simulated
    let o = nsctl(&["simulate", scenario().to_str().unwrap(), "--strategy", dir.path().join("report.json").to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reach_writes_tube() {
    let dir = tempfile::tempdir().unwrap();
    let o = nsctl(&["reach", scenario().to_str().unwrap(), "--controller", "xi3", "--steps", "4", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("4 steps"));
    assert_eq!(json(&dir.path().join("reach.json"))["steps"], 4);
    let csvs: Vec<_> = std::fs::read_dir(dir.path()).unwrap().filter_map(|e| e.ok()).filter(|e| e.path().extension().is_some_and(|x| x == "csv")).collect();
    assert_eq!(csvs.len(), 1);
}

#[test]
fn bad_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "name = \"x\"\nformula = \"F nowhere\"\n").unwrap();
    let o = nsctl(&["translate", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));

    let o = nsctl(&["verify", "does/not/exist.toml"]);
    assert_eq!(o.status.code(), Some(2));

    let o = nsctl(&["reach", scenario().to_str().unwrap(), "--controller", "xi9", "--steps", "3", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
