use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn surfcalc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_surfcalc")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("surfcalc-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn bundled(file: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(file).display().to_string()
}

#[test]
fn list_builtins_names_the_catalog() {
    let out = surfcalc(&["list-builtins"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["sphere", "torus", "quadratic", "dilation"] {
        assert!(text.contains(name), "missing {name}");
    }
    let json = surfcalc(&["list-builtins", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert!(v.as_array().is_some_and(|a| !a.is_empty()));
}

#[test]
fn version_prints_the_package_version() {
    let out = surfcalc(&["version"]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn passing_scenario_exits_zero_and_writes_artifacts() {
    let dir = scratch("pass");
    let out = surfcalc(&["run", &bundled("sphere_identities.toml"), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["passed"], true);
    assert!(dir.join("verify-identities_identities.csv").exists());
    assert!(dir.join("verify-identities_parts.csv").exists());
}

#[test]
fn failing_check_exits_one() {
    let dir = scratch("fail");
    let file = dir.join("strict.toml");
    std::fs::write(
        &file,
        "name = \"strict\"\nsuites = [\"verify-geometry\"]\n[surface]\nkind = \"torus\"\nparams = [2.0, 0.5]\n[tolerances]\ncurvature_fd = 1e-30\n",
    )
    .unwrap();
    let out = surfcalc(&["run", file.to_str().unwrap(), "--out", dir.join("out").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().contains("mean_curvature_fd"));
}

#[test]
fn configuration_errors_exit_two() {
    let dir = scratch("config");
    let file = dir.join("broken.toml");
    std::fs::write(&file, "name = \"broken\"\n").unwrap();
    let out = surfcalc(&["run", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("surface"));
    let missing = surfcalc(&["run", dir.join("absent.toml").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn single_suite_selection() {
    let dir = scratch("single");
    let out = surfcalc(&["run", &bundled("torus_geometry.toml"), "--suite", "verify-geometry", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    let suites = summary["suites"].as_array().unwrap();
    assert_eq!(suites.len(), 1);
    assert_eq!(suites[0]["suite"], "verify-geometry");
}
