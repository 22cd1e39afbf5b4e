use std::path::Path;
use std::process::{Command, Output};

fn rtamp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rtamp"))
        .args(args)
        .env("RTAMP_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_solve_validate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("bt");
    let sol = dir.path().join("sol.json");
    assert!(rtamp(&["gen", "--domain", "blocktower", "--m", "2", "--seed", "3", "--out", arg(&bundle)]).status.success());
    for f in ["instance.json", "domain.pddl", "problem.pddl", "scene.json", "init.json", "goal.json"] {
        assert!(bundle.join(f).exists(), "{f}");
    }
    assert!(rtamp(&["solve", "--bundle", arg(&bundle), "--out", arg(&sol)]).status.success());
    let ok = rtamp(&["validate", "--bundle", arg(&bundle), "--solution", arg(&sol)]);
    assert!(ok.status.success());
    assert_eq!(String::from_utf8_lossy(&ok.stdout).trim(), "valid");

    // Drop the last step: the goal is no longer reached.
    let mut s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&sol).unwrap()).unwrap();
    s["steps"].as_array_mut().unwrap().pop();
    s["steps"].as_array_mut().unwrap().pop();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, s.to_string()).unwrap();
    let out = rtamp(&["validate", "--bundle", arg(&bundle), "--solution", arg(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("invalid"));
}

#[test]
fn run_cdf_compare() {
    let dir = tempfile::tempdir().unwrap();
    let results = dir.path().join("r.jsonl");
    let cfg = dir.path().join("suite.toml");
    std::fs::write(&cfg, "domains = [\"blocktower\"]\nm = [1]\nvariants = [\"full\"]\ntrials = 9\n").unwrap();
    // Flags override the file.
    let run = rtamp(&[
        "run", "--config", arg(&cfg), "--variant", "full,no-reward", "--trials", "2", "--timeout", "20", "--out", arg(&results),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(std::fs::read_to_string(&results).unwrap().lines().count(), 4);

    let csv = dir.path().join("cdf.csv");
    assert!(rtamp(&["cdf", "--in", arg(&results), "--group", "domain,variant", "--out", arg(&csv)]).status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("domain,variant,time,fraction\n"));
    assert!(text.contains("blocktower,no-reward,0,0"));

    let cmp = rtamp(&["compare", "--in", arg(&results)]);
    let summary: serde_json::Value = serde_json::from_slice(&cmp.stdout).unwrap();
    let groups = summary["groups"].as_array().unwrap();
    assert_eq!(groups.len(), 2);
    assert!(groups.iter().all(|g| g["trials"] == 2));
}

#[test]
fn bad_input_fails_cleanly() {
    assert_eq!(rtamp(&["gen", "--domain", "kitchen", "--m", "0", "--out", "/nonexistent/x"]).status.code(), Some(2));
    assert!(!rtamp(&["run", "--domain", "garden"]).status.success());
    assert!(!rtamp(&["solve"]).status.success());
}
