use surfcalc::config::Scenario;
use surfcalc::Error;

fn config_error(src: &str) -> (usize, String) {
    match Scenario::parse(src) {
        Err(Error::Config { line, msg }) => (line, msg),
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn missing_surface_is_reported_by_name() {
    let (_, msg) = config_error("name = \"x\"\n");
    assert!(msg.contains("surface"), "{msg}");
}

#[test]
fn unknown_surface_kind_points_at_its_line() {
    let (line, msg) = config_error("name = \"x\"\n\n[surface]\nkind = \"klein\"\n");
    assert_eq!(line, 4);
    assert!(msg.contains("klein"), "{msg}");
}

#[test]
fn unknown_keys_are_rejected() {
    let (_, msg) = config_error("name = \"x\"\n[surface]\nkind = \"sphere\"\ncolour = 1\n");
    assert!(msg.contains("colour"), "{msg}");
}

#[test]
fn unknown_suite_is_rejected() {
    let (_, msg) = config_error("name = \"x\"\nsuites = [\"verify-everything\"]\n[surface]\nkind = \"sphere\"\n");
    assert!(msg.contains("verify-everything"), "{msg}");
}

#[test]
fn grid_and_time_bounds_are_enforced() {
    for extra in ["[grid]\nresolutions = [8]\n", "[time]\ndt = 0.0\n", "[time]\nt_end = -1.0\n"] {
        let src = format!("name = \"x\"\n[surface]\nkind = \"sphere\"\n{extra}");
        assert!(matches!(Scenario::parse(&src), Err(Error::Config { .. })), "{extra}");
    }
}

#[test]
fn malformed_expression_is_a_config_error() {
    let (_, msg) = config_error("name = \"x\"\n[surface]\nkind = \"sphere\"\n[fields]\nrho0 = \"1 + * x1\"\n");
    assert!(msg.contains("rho0"), "{msg}");
}

#[test]
fn bundled_scenarios_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        count += 1;
    }
    assert!(count >= 2);
}
