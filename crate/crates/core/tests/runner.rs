use surfcalc::config::Scenario;
use surfcalc::runner::{run, run_suite};

const IDENTITIES: &str = "name = \"det\"\nsuites = [\"verify-identities\", \"verify-geometry\"]\n[surface]\nkind = \"sphere\"\n[grid]\npoints = 200\n";

fn with_seed(seed: u64) -> Scenario {
    Scenario::parse(&format!("seed = {seed}\n{IDENTITIES}")).unwrap()
}

#[test]
fn same_seed_gives_identical_summaries() {
    let a = run(&with_seed(4), None, None).unwrap().to_json().unwrap();
    let b = run(&with_seed(4), None, None).unwrap().to_json().unwrap();
    assert_eq!(a, b);
}

#[test]
fn seed_changes_the_random_draws() {
    let a = run(&with_seed(4), None, None).unwrap();
    let b = run(&with_seed(5), None, None).unwrap();
    assert_ne!(a.to_json().unwrap(), b.to_json().unwrap());
}

#[test]
fn single_suite_reproduces_the_full_run() {
    let sc = with_seed(9);
    let full = run(&sc, None, None).unwrap();
    let alone = run_suite(&sc, "verify-geometry").unwrap();
    let in_full = &full.suites.iter().find(|s| s.suite == "verify-geometry").unwrap().checks;
    assert_eq!(&alone.checks, in_full);
}

#[test]
fn artifacts_match_the_returned_summary() {
    let dir = std::env::temp_dir().join(format!("surfcalc-runner-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    let summary = run(&with_seed(2), None, Some(&dir)).unwrap();
    assert_eq!(std::fs::read_to_string(dir.join("summary.json")).unwrap(), summary.to_json().unwrap());
    let mut rows = csv::Reader::from_path(dir.join("verify-geometry_nodes.csv")).unwrap();
    assert!(rows.records().count() > 0);
}

#[test]
fn unknown_suite_is_an_error() {
    assert!(run(&with_seed(1), Some("verify-nothing"), None).is_err());
}
