//! Acceptance criteria, one pass/fail line each. Runs the bundled scenarios
//! at their declared tolerances.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use surfcalc::config::Scenario;
use surfcalc::runner::{run, Check, Summary};

fn scenario(file: &str) -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(file);
    Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Runs the selected suites of a bundled scenario and remembers the JSON.
struct Runs {
    json: BTreeMap<(String, Option<String>), String>,
}

impl Runs {
    fn run(&mut self, file: &str, suite: Option<&str>) -> Result<Summary, String> {
        let sc = scenario(file);
        let summary = run(&sc, suite, None).map_err(|e| e.to_string())?;
        let json = summary.to_json().map_err(|e| e.to_string())?;
        self.json.insert((file.to_string(), suite.map(String::from)), json);
        Ok(summary)
    }
}

/// Checks of `suite` whose names satisfy `keep`.
fn checks<'a>(s: &'a Summary, suite: &str, keep: impl Fn(&str) -> bool) -> Vec<&'a Check> {
    s.suites.iter().filter(|r| r.suite == suite).flat_map(|r| r.checks.iter()).filter(|c| keep(&c.name)).collect()
}

struct Outcome {
    passed: bool,
    detail: String,
}

/// All checks must pass; the detail names the failures or the count.
fn judge(label: &str, cs: &[&Check]) -> Outcome {
    let failed: Vec<String> = cs.iter().filter(|c| !c.passed).map(|c| format!("{} = {:e} (tol {:e})", c.name, c.value, c.tolerance)).collect();
    if cs.is_empty() {
        return Outcome { passed: false, detail: format!("{label}: no checks ran") };
    }
    if failed.is_empty() {
        Outcome { passed: true, detail: format!("{label}: {} checks", cs.len()) }
    } else {
        Outcome { passed: false, detail: format!("{label}: {}", failed.join("; ")) }
    }
}

fn merge(parts: Vec<Outcome>) -> Outcome {
    Outcome { passed: parts.iter().all(|o| o.passed), detail: parts.into_iter().map(|o| o.detail).collect::<Vec<_>>().join(" | ") }
}

fn within(limit: Duration, took: Duration, o: Outcome) -> Outcome {
    if took <= limit {
        o
    } else {
        Outcome { passed: false, detail: format!("{} | runtime {:.1} s exceeds {} s", o.detail, took.as_secs_f64(), limit.as_secs()) }
    }
}

fn value(s: &Summary, suite: &str, name: &str) -> String {
    s.check(suite, name).map_or("missing".into(), |c| format!("{name} = {:.3e}", c.value))
}

type Criterion = fn(&mut Runs) -> Result<Outcome, String>;

fn geometry(r: &mut Runs) -> Result<Outcome, String> {
    let t = Instant::now();
    let sphere = r.run("geometry.toml", Some("verify-geometry"))?;
    let torus = r.run("torus_geometry.toml", Some("verify-geometry"))?;
    let o = merge(vec![
        judge("sphere", &checks(&sphere, "verify-geometry", |_| true)),
        judge("torus", &checks(&torus, "verify-geometry", |_| true)),
    ]);
    Ok(within(Duration::from_secs(10), t.elapsed(), o))
}

fn identities(r: &mut Runs) -> Result<Outcome, String> {
    let t = Instant::now();
    let sphere = r.run("sphere_identities.toml", None)?;
    let torus = r.run("torus_geometry.toml", Some("verify-identities"))?;
    let not_parts = |n: &str| !n.starts_with("parts_");
    let o = merge(vec![
        judge("sphere", &checks(&sphere, "verify-identities", not_parts)),
        judge("torus", &checks(&torus, "verify-identities", not_parts)),
    ]);
    Ok(within(Duration::from_secs(30), t.elapsed(), o))
}

fn integration_by_parts(r: &mut Runs) -> Result<Outcome, String> {
    let sphere = r.run("sphere_identities.toml", None)?;
    let torus = r.run("torus_geometry.toml", Some("verify-identities"))?;
    let parts = |n: &str| n.starts_with("parts_");
    Ok(merge(vec![
        judge("sphere", &checks(&sphere, "verify-identities", parts)),
        judge("torus", &checks(&torus, "verify-identities", parts)),
    ]))
}

fn transport(r: &mut Runs) -> Result<Outcome, String> {
    let s = r.run("dilating_sphere_mass.toml", None)?;
    let o = judge("transport", &checks(&s, "transport", |_| true));
    Ok(Outcome { detail: format!("{}, {}, {}", o.detail, value(&s, "transport", "mass_drift"), value(&s, "transport", "temporal_order")), ..o })
}

fn heat(r: &mut Runs) -> Result<Outcome, String> {
    let t = Instant::now();
    let s = r.run("heat_decay.toml", None)?;
    let o = judge("heat", &checks(&s, "simulate-heat", |_| true));
    let o = Outcome { detail: format!("{}, {}, {}", o.detail, value(&s, "simulate-heat", "relative_error_n64"), value(&s, "simulate-heat", "spatial_order")), ..o };
    Ok(within(Duration::from_secs(120), t.elapsed(), o))
}

fn conservation(r: &mut Runs) -> Result<Outcome, String> {
    let s = r.run("conservation.toml", Some("conservation-report"))?;
    Ok(judge("conservation", &checks(&s, "conservation-report", |_| true)))
}

fn variations(r: &mut Runs) -> Result<Outcome, String> {
    let s = r.run("variations.toml", Some("check-variations"))?;
    Ok(judge("variations", &checks(&s, "check-variations", |_| true)))
}

fn representations(r: &mut Runs) -> Result<Outcome, String> {
    let s = r.run("variations.toml", Some("check-representations"))?;
    Ok(judge("representations", &checks(&s, "check-representations", |_| true)))
}

fn thermodynamics(r: &mut Runs) -> Result<Outcome, String> {
    let s = r.run("thermodynamics.toml", None)?;
    let wanted = |n: &str| matches!(n, "entropy_production" | "free_energy_identity" | "enthalpy");
    let cs = checks(&s, "residuals", wanted);
    if cs.len() != 3 {
        return Ok(Outcome { passed: false, detail: format!("expected 3 thermodynamic checks, found {}", cs.len()) });
    }
    Ok(judge("thermodynamics", &cs))
}

fn determinism(r: &mut Runs) -> Result<Outcome, String> {
    let first: Vec<_> = r.json.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    let mut differing = Vec::new();
    for ((file, suite), json) in &first {
        r.run(file, suite.as_deref())?;
        if r.json[&(file.clone(), suite.clone())] != *json {
            differing.push(file.clone());
        }
    }
    if first.is_empty() {
        return Ok(Outcome { passed: false, detail: "no earlier runs to compare".into() });
    }
    if differing.is_empty() {
        Ok(Outcome { passed: true, detail: format!("{} repeated runs identical", first.len()) })
    } else {
        Ok(Outcome { passed: false, detail: format!("summaries differ: {}", differing.join(", ")) })
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 10] = [
        ("geometry", geometry),
        ("identities", identities),
        ("integration by parts", integration_by_parts),
        ("transport", transport),
        ("heat solver", heat),
        ("conservation", conservation),
        ("variations", variations),
        ("energy representations", representations),
        ("thermodynamics", thermodynamics),
        ("determinism", determinism),
    ];
    let mut runs = Runs { json: BTreeMap::new() };
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f(&mut runs).unwrap_or_else(|e| Outcome { passed: false, detail: format!("error: {e}") });
        failures += usize::from(!o.passed);
        println!(
            "{} {:>2} {:<24} [{:6.1} s] {}",
            if o.passed { "PASS" } else { "FAIL" },
            i + 1,
            name,
            t.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
