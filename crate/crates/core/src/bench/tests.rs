use proptest::prelude::*;

use super::*;
use crate::tamp::Variant;

fn record(variant: Variant, seed: u64, solved: Option<f64>, mp_calls: u64) -> TrialRecord {
    TrialRecord {
        instance: "kitchen-3".into(),
        domain: DomainKind::Kitchen,
        m: 3,
        instance_seed: 0,
        variant,
        seed,
        outcome: if solved.is_some() { TrialOutcome::Solved } else { TrialOutcome::Timeout },
        valid: solved.map(|_| true),
        plan_length: solved.map(|_| 18),
        counters: Counters {
            mp_calls,
            ..Default::default()
        },
        wall_seconds: solved.unwrap_or(60.0),
        tp_seconds: 0.0,
    }
}

#[test]
fn cdf_ends_at_success_rate() {
    let mut rs: Vec<_> = [1.0, 2.0, 4.0].iter().enumerate().map(|(i, &t)| record(Variant::Full, i as u64, Some(t), 0)).collect();
    rs.extend((3..10).map(|i| record(Variant::Full, i, None, 0)));
    let g = &cdf(&rs, &[GroupKey::Variant])[0];
    assert_eq!(g.trials, 10);
    assert_eq!(g.steps, vec![(1.0, 0.1), (2.0, 0.2), (4.0, 0.3)]);
    assert_eq!(g.success_rate(), 0.3);
}

#[test]
fn cdf_without_successes_is_empty() {
    let rs: Vec<_> = (0..4).map(|i| record(Variant::NoReward, i, None, 0)).collect();
    let g = &cdf(&rs, &[GroupKey::Domain, GroupKey::Variant])[0];
    assert_eq!(g.key, vec!["kitchen".to_string(), "no-reward".to_string()]);
    assert!(g.steps.is_empty());
    assert_eq!(g.success_rate(), 0.0);
}

#[test]
fn cdf_hand_fixture() {
    // Two groups; a tie at t = 3 collapses to one step.
    let rs = vec![
        record(Variant::Full, 0, Some(3.0), 0),
        record(Variant::Full, 1, Some(0.5), 0),
        record(Variant::Full, 2, Some(3.0), 0),
        record(Variant::Full, 3, None, 0),
        record(Variant::NoRejection, 0, Some(2.0), 0),
    ];
    let groups = cdf(&rs, &[GroupKey::Variant]);
    assert_eq!(groups.len(), 2);
    assert_eq!(groups[0].key, vec!["full".to_string()]);
    assert_eq!(groups[0].steps, vec![(0.5, 0.25), (3.0, 0.75)]);
    assert_eq!(groups[1].steps, vec![(2.0, 1.0)]);

    let mut csv = Vec::new();
    write_cdf_csv(&mut csv, &[GroupKey::Variant], &groups).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(
        text,
        "variant,time,fraction\nfull,0,0\nfull,0.5,0.25\nfull,3,0.75\nno-rejection,0,0\nno-rejection,2,1\n"
    );
}

proptest! {
    #[test]
    fn cdf_is_monotone(outcomes in proptest::collection::vec(proptest::option::of(0.0f64..100.0), 1..60)) {
        let rs: Vec<_> = outcomes.iter().enumerate().map(|(i, &t)| record(Variant::Full, i as u64, t, 0)).collect();
        let g = &cdf(&rs, &[])[0];
        let rate = outcomes.iter().filter(|t| t.is_some()).count() as f64 / outcomes.len() as f64;
        for w in g.steps.windows(2) {
            prop_assert!(w[0].0 < w[1].0 && w[0].1 < w[1].1);
        }
        let last = g.steps.last().map_or(0.0, |s| s.1);
        prop_assert!((last - rate).abs() < 1e-12);
        prop_assert!(g.steps.iter().all(|s| s.1 > 0.0 && s.1 <= 1.0));
    }
}

#[test]
fn compare_fixture() {
    let rs = vec![
        record(Variant::Full, 0, Some(1.0), 10),
        record(Variant::Full, 1, Some(3.0), 20),
        record(Variant::Full, 2, None, 60),
        record(Variant::Full, 3, Some(2.0), 30),
        record(Variant::NoRejection, 0, None, 5),
        record(Variant::NoRejection, 1, Some(7.0), 15),
    ];
    let s = compare(&rs);
    assert_eq!(s.groups.len(), 2);
    let full = s.get("kitchen-3", "full").unwrap();
    assert_eq!((full.trials, full.successes), (4, 3));
    assert_eq!(full.success_rate, 0.75);
    assert_eq!(full.median_solve_seconds, Some(2.0));
    assert_eq!(full.counter_means["mp_calls"], 30.0);
    let nr = s.get("kitchen-3", "no-rejection").unwrap();
    assert_eq!(nr.success_rate, 0.5);
    assert_eq!(nr.median_solve_seconds, Some(7.0));
    assert_eq!(nr.counter_means["mp_calls"], 10.0);
    assert_eq!(nr.invalid, 0);

    assert!(compare(&[]).groups.is_empty());
    let even = compare(&rs[..2]);
    assert_eq!(even.groups[0].median_solve_seconds, Some(2.0));
}

#[test]
fn record_lines_round_trip() {
    let r = record(Variant::NoRewardNoRejection, 4, Some(0.1 + 0.2), 7);
    let line = serde_json::to_string(&r).unwrap();
    assert!(line.contains("\"variant\":\"no-reward-no-rejection\""));
    let back: TrialRecord = serde_json::from_str(&line).unwrap();
    assert_eq!(back, r);
}

#[test]
fn config_parses_from_toml() {
    let c = SuiteConfig::from_toml(
        "domains = [\"nonmon\", \"blocktower\"]\nm = [2]\nvariants = [\"full\", \"no-reward\"]\ntrials = 5\nout = \"r.jsonl\"\n",
    )
    .unwrap();
    assert_eq!(c.domains, vec![DomainKind::Nonmonotonic, DomainKind::Blocktower]);
    assert_eq!(c.variants, vec![Variant::Full, Variant::NoReward]);
    assert_eq!((c.trials, c.timeout), (5, 60.0));
    assert!(SuiteConfig::from_toml("trails = 3").is_err());
}

fn small_suite(out: std::path::PathBuf) -> SuiteConfig {
    SuiteConfig {
        domains: vec![DomainKind::Blocktower],
        m: vec![1],
        variants: vec![Variant::Full, Variant::NoRejection],
        trials: 3,
        timeout: 30.0,
        max_iterations: Some(60),
        threads: Some(2),
        out,
        ..Default::default()
    }
}

fn untimed(rs: &[TrialRecord]) -> Vec<TrialRecord> {
    rs.iter().map(TrialRecord::untimed).collect()
}

#[test]
fn suite_runs_every_trial_once() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_suite(dir.path().join("sub/results.jsonl"));
    let added = run_suite(&cfg).unwrap();
    assert_eq!(added.len(), 6);
    assert!(added.iter().all(|r| r.valid != Some(false)));
    assert!(added.iter().all(|r| r.wall_seconds <= cfg.timeout + 5.0));
    assert!(run_suite(&cfg).unwrap().is_empty());
    assert_eq!(read_records(&cfg.out).unwrap().len(), 6);
}

#[test]
fn interrupted_suite_resumes_to_the_same_file() {
    let dir = tempfile::tempdir().unwrap();
    let full = small_suite(dir.path().join("full.jsonl"));
    run_suite(&full).unwrap();
    let reference = read_records(&full.out).unwrap();

    // Keep two complete lines and half of the third.
    let text = std::fs::read_to_string(&full.out).unwrap();
    let lines: Vec<&str> = text.split_inclusive('\n').collect();
    let cut = format!("{}{}{}", lines[0], lines[1], &lines[2][..lines[2].len() / 2]);
    let resumed = small_suite(dir.path().join("resumed.jsonl"));
    std::fs::write(&resumed.out, cut).unwrap();
    assert_eq!(read_records(&resumed.out).unwrap().len(), 2);
    assert_eq!(run_suite(&resumed).unwrap().len(), 4);
    assert_eq!(untimed(&read_records(&resumed.out).unwrap()), untimed(&reference));
}

#[test]
fn suites_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = small_suite(dir.path().join("a.jsonl"));
    let b = SuiteConfig {
        threads: Some(1),
        ..small_suite(dir.path().join("b.jsonl"))
    };
    run_suite(&a).unwrap();
    run_suite(&b).unwrap();
    assert_eq!(untimed(&read_records(&a.out).unwrap()), untimed(&read_records(&b.out).unwrap()));
}

#[test]
fn corrupt_record_is_reported_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.jsonl");
    std::fs::write(&path, "{}\n").unwrap();
    assert!(matches!(read_records(&path), Err(BenchError::Record { line: 1, .. })));
    assert!(read_records(&dir.path().join("none.jsonl")).unwrap().is_empty());
}
