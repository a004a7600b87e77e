//! Scenario files: TOML with dotted sections, analytic fields as expression
//! strings over `x1, x2, x3, t`, and the catalog of built-in names.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolving::MotionLaw;
use crate::expr::Expr;
use crate::field::{ScalarField, VectorField};
use crate::geometry::{ChartAtlas, GeomDerivs};
use crate::laws::{FluxLaw, PressureLaw};
use crate::variational::EPS_LADDER;

/// Smallest grid resolution the blended sphere grid supports.
pub const MIN_RESOLUTION: usize = 24;

pub const SUITES: [&str; 10] = [
    "verify-geometry",
    "verify-identities",
    "transport",
    "residuals",
    "simulate-heat",
    "simulate-diffusion",
    "simulate-barotropic",
    "check-variations",
    "check-representations",
    "conservation-report",
];

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Suites run by default; all of them when empty.
    #[serde(default)]
    pub suites: Vec<String>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub surface: SurfaceSpec,
    #[serde(default)]
    pub motion: MotionSpec,
    #[serde(default)]
    pub fields: FieldSpecs,
    #[serde(default = "LawSpec::quadratic")]
    pub pressure: LawSpec,
    #[serde(default = "LawSpec::unit_linear")]
    pub flux: LawSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub time: TimeSpec,
    #[serde(default)]
    pub variations: VariationSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_seed() -> u64 {
    1
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    pub kind: String,
    #[serde(default)]
    pub params: Vec<f64>,
    /// `analytic` or `finite-difference`.
    #[serde(default = "analytic")]
    pub derivatives: String,
}

fn analytic() -> String {
    "analytic".into()
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MotionSpec {
    #[serde(default = "static_kind")]
    pub kind: String,
    #[serde(default)]
    pub params: Vec<f64>,
    /// Velocity components for `prescribed` motion.
    pub velocity: Option<[String; 3]>,
    /// Tangential part `u` of the velocity.
    pub tangential: Option<[String; 3]>,
}

fn static_kind() -> String {
    "static".into()
}

impl Default for MotionSpec {
    fn default() -> Self {
        MotionSpec { kind: static_kind(), params: vec![], velocity: None, tangential: None }
    }
}

/// A vector field given as a built-in name or as three expressions.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum VectorSpec {
    Builtin(String),
    Components([String; 3]),
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpecs {
    pub rho0: Option<String>,
    pub v: Option<VectorSpec>,
    pub sigma: Option<String>,
    pub e: Option<String>,
    pub s: Option<String>,
    pub theta0: Option<String>,
    /// Closed-form temperature used as the error reference.
    pub theta_exact: Option<String>,
    pub c0: Option<String>,
    pub c_exact: Option<String>,
    pub mu: Option<String>,
    pub lambda: Option<String>,
    pub kappa: Option<String>,
    pub nu: Option<String>,
    pub c_theta: Option<String>,
    pub force: Option<VectorSpec>,
    pub q_theta: Option<String>,
    pub q_c: Option<String>,
    /// Extra right-hand side of the heat or diffusion equation.
    pub forcing: Option<String>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LawSpec {
    pub law: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

impl LawSpec {
    fn quadratic() -> Self {
        LawSpec { law: "quadratic".into(), params: vec![] }
    }

    fn unit_linear() -> Self {
        LawSpec { law: "linear".into(), params: vec![1.0] }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Solver resolutions `N` (grids are `N × 2N`).
    #[serde(default = "default_resolutions")]
    pub resolutions: Vec<usize>,
    /// Gauss order of the surface quadrature.
    #[serde(default = "default_quadrature")]
    pub quadrature: usize,
    /// Random sample points per pointwise suite.
    #[serde(default = "default_points")]
    pub points: usize,
    /// Random field draws per check.
    #[serde(default = "default_draws")]
    pub draws: usize,
}

fn default_resolutions() -> Vec<usize> {
    vec![32]
}
fn default_quadrature() -> usize {
    32
}
fn default_points() -> usize {
    1000
}
fn default_draws() -> usize {
    3
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { resolutions: default_resolutions(), quadrature: default_quadrature(), points: default_points(), draws: default_draws() }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
}

fn default_dt() -> f64 {
    1e-3
}
fn default_t_end() -> f64 {
    0.5
}

impl Default for TimeSpec {
    fn default() -> Self {
        TimeSpec { dt: default_dt(), t_end: default_t_end() }
    }
}

impl TimeSpec {
    /// Number of steps of size `dt` that reach `t_end`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round().max(1.0) as usize
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct VariationSpec {
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    /// ε ladder of the slope checks (action and nonlinear flux).
    #[serde(default = "default_action_eps")]
    pub action_eps: Vec<f64>,
    /// Gauss order of the action checks.
    #[serde(default = "default_action_order")]
    pub action_order: usize,
    /// Time steps of the action checks (a multiple of 4).
    #[serde(default = "default_time_steps")]
    pub time_steps: usize,
    /// Gauss order of the dissipation, flux and stress-divergence integrals.
    #[serde(default = "default_variation_order")]
    pub order: usize,
}

fn default_eps() -> Vec<f64> {
    EPS_LADDER.to_vec()
}
fn default_action_eps() -> Vec<f64> {
    EPS_LADDER[..3].to_vec()
}
fn default_action_order() -> usize {
    40
}
fn default_time_steps() -> usize {
    16
}
fn default_variation_order() -> usize {
    64
}

impl Default for VariationSpec {
    fn default() -> Self {
        VariationSpec {
            eps: default_eps(),
            action_eps: default_action_eps(),
            action_order: default_action_order(),
            time_steps: default_time_steps(),
            order: default_variation_order(),
        }
    }
}

macro_rules! tolerances {
    ($($(#[$doc:meta])* $name:ident = $val:expr;)*) => {
        /// Pass thresholds; every check reports the one it was judged by.
        #[derive(Clone, Debug, Deserialize, Serialize)]
        #[serde(deny_unknown_fields, default)]
        pub struct Tolerances {
            $($(#[$doc])* pub $name: f64,)*
        }

        impl Default for Tolerances {
            fn default() -> Self {
                Tolerances { $($name: $val,)* }
            }
        }
    };
}

tolerances! {
    /// Relative area error.
    area = 1e-8;
    /// Mean curvature with analytic chart derivatives.
    curvature = 1e-8;
    /// Mean curvature with finite-difference chart derivatives.
    curvature_fd = 1e-6;
    projection = 1e-10;
    /// Pointwise metric invariants (inverse metric, unit normal, projector).
    metric = 1e-12;
    normal_integral = 1e-7;
    partition = 1e-12;
    identity = 1e-9;
    integration_by_parts = 1e-6;
    mass_drift = 1e-8;
    jacobian_rate = 1e-6;
    transport_theorem = 1e-6;
    /// Lower bound on the observed RK4 order.
    time_order = 3.8;
    residual = 1e-8;
    equivalence = 1e-9;
    free_energy = 1e-10;
    entropy_floor = 1e-12;
    /// Relative solver error at the finest resolution.
    solver_error = 1e-3;
    /// Lower bound on the observed spatial order.
    spatial_order = 3.5;
    conservation = 1e-6;
    stress_divergence = 1e-7;
    dissipation_variation = 1e-7;
    action_variation = 1e-6;
    /// Central difference of the translation action.
    action_translation = 1e-9;
    /// Work variation with unit surface tension only.
    surface_tension = 1e-8;
    /// Allowed deviation of the central-difference slope from 2.
    slope = 0.1;
    flux_linear = 1e-8;
    flux_pointwise = 1e-10;
    jacobian_variation = 1e-7;
    tangential_consistency = 1e-10;
    representation = 1e-7;
    action_representation = 1e-8;
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<String>,
    /// Write binary field dumps of the solver suites.
    #[serde(default)]
    pub dumps: bool,
}

fn line_of_offset(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

/// Line of `key` inside `[section]` (or at top level when `section` is
/// empty); 0 when absent.
fn line_of_key(src: &str, section: &str, key: &str) -> usize {
    let mut current = String::new();
    for (i, line) in src.lines().enumerate() {
        let l = line.trim();
        if let Some(rest) = l.strip_prefix('[') {
            current = rest.trim_end_matches(']').trim().to_string();
            if key.is_empty() && current == section {
                return i + 1;
            }
            continue;
        }
        if current == section && l.split('=').next().is_some_and(|k| k.trim() == key) {
            return i + 1;
        }
    }
    0
}

fn config_err(src: &str, section: &str, key: &str, msg: impl Into<String>) -> Error {
    Error::Config { line: line_of_key(src, section, key), msg: msg.into() }
}

impl Scenario {
    pub fn parse(src: &str) -> Result<Scenario> {
        let sc: Scenario = toml::from_str(src).map_err(|e| Error::Config {
            line: e.span().map_or(0, |s| line_of_offset(src, s.start)),
            msg: e.message().to_string(),
        })?;
        sc.validate(src)?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        Scenario::parse(&std::fs::read_to_string(path)?)
    }

    fn validate(&self, src: &str) -> Result<()> {
        for s in &self.suites {
            if !SUITES.contains(&s.as_str()) {
                return Err(config_err(src, "", "suites", format!("unknown suite `{s}`")));
            }
        }
        self.atlas().map_err(|e| config_err(src, "surface", "kind", e.to_string()))?;
        if !["analytic", "finite-difference"].contains(&self.surface.derivatives.as_str()) {
            return Err(config_err(src, "surface", "derivatives", "derivatives must be `analytic` or `finite-difference`"));
        }
        self.motion().map_err(|e| config_err(src, "motion", "kind", e.to_string()))?;
        self.pressure_law().map_err(|e| config_err(src, "pressure", "law", e.to_string()))?;
        self.flux_law().map_err(|e| config_err(src, "flux", "law", e.to_string()))?;
        let f = &self.fields;
        let scalars = [
            ("rho0", &f.rho0),
            ("sigma", &f.sigma),
            ("e", &f.e),
            ("s", &f.s),
            ("theta0", &f.theta0),
            ("theta_exact", &f.theta_exact),
            ("c0", &f.c0),
            ("c_exact", &f.c_exact),
            ("mu", &f.mu),
            ("lambda", &f.lambda),
            ("kappa", &f.kappa),
            ("nu", &f.nu),
            ("c_theta", &f.c_theta),
            ("q_theta", &f.q_theta),
            ("q_c", &f.q_c),
            ("forcing", &f.forcing),
        ];
        for (key, spec) in scalars {
            if let Some(s) = spec {
                scalar_field(s).map_err(|e| config_err(src, "fields", key, format!("`{key}`: {e}")))?;
            }
        }
        for (key, spec) in [("v", &f.v), ("force", &f.force)] {
            if let Some(s) = spec {
                vector_field(s).map_err(|e| config_err(src, "fields", key, format!("`{key}`: {e}")))?;
            }
        }
        if self.grid.resolutions.is_empty() || self.grid.resolutions.iter().any(|&n| n < MIN_RESOLUTION) {
            return Err(config_err(src, "grid", "resolutions", format!("resolutions must be nonempty and at least {MIN_RESOLUTION}")));
        }
        if self.grid.quadrature < 4 {
            return Err(config_err(src, "grid", "quadrature", "quadrature order must be at least 4"));
        }
        if !(self.time.dt > 0.0) {
            return Err(config_err(src, "time", "dt", "dt must be positive"));
        }
        if !(self.time.t_end > 0.0) {
            return Err(config_err(src, "time", "t_end", "t_end must be positive"));
        }
        let v = &self.variations;
        for (key, ladder) in [("eps", &v.eps), ("action_eps", &v.action_eps)] {
            if ladder.len() < 2 || ladder.iter().any(|e| !(*e > 0.0)) {
                return Err(config_err(src, "variations", key, "the ε ladder needs at least two positive entries"));
            }
        }
        if v.time_steps == 0 || !v.time_steps.is_multiple_of(4) {
            return Err(config_err(src, "variations", "time_steps", "time_steps must be a positive multiple of 4"));
        }
        Ok(())
    }

    /// Suites to run: the override, else the declared list, else all.
    pub fn selected_suites(&self, only: Option<&str>) -> Result<Vec<String>> {
        if let Some(s) = only {
            if !SUITES.contains(&s) {
                return Err(Error::Invalid(format!("unknown suite `{s}`")));
            }
            return Ok(vec![s.to_string()]);
        }
        if self.suites.is_empty() {
            return Ok(SUITES.iter().map(|s| s.to_string()).collect());
        }
        Ok(self.suites.clone())
    }

    pub fn atlas(&self) -> Result<ChartAtlas> {
        let p = &self.surface.params;
        let arg = |i: usize, d: f64| p.get(i).copied().unwrap_or(d);
        let atlas = match self.surface.kind.as_str() {
            "plane" => ChartAtlas::plane(),
            "sphere" => {
                let r = arg(0, 1.0);
                if !(r > 0.0) {
                    return Err(Error::Invalid("sphere radius must be positive".into()));
                }
                ChartAtlas::sphere(r)
            }
            "torus" => {
                let (big, small) = (arg(0, 2.0), arg(1, 0.5));
                if !(small > 0.0 && big > small) {
                    return Err(Error::Invalid("torus needs R > r > 0".into()));
                }
                ChartAtlas::torus(big, small)
            }
            other => return Err(Error::Invalid(format!("unknown surface `{other}`"))),
        };
        Ok(if self.surface.derivatives == "finite-difference" { atlas.with_derivs(GeomDerivs::FiniteDifference) } else { atlas })
    }

    pub fn motion(&self) -> Result<MotionLaw> {
        let m = &self.motion;
        let vec3 = || -> Result<[f64; 3]> {
            m.params.as_slice().try_into().map_err(|_| Error::Invalid(format!("motion `{}` takes three parameters", m.kind)))
        };
        let law = match m.kind.as_str() {
            "static" => MotionLaw::fixed(),
            "translation" => MotionLaw::translation(vec3()?),
            "rotation" => MotionLaw::rotation(vec3()?),
            "dilation" => MotionLaw::dilation(),
            "prescribed" => {
                let v = m.velocity.as_ref().ok_or_else(|| Error::Invalid("prescribed motion needs `velocity`".into()))?;
                MotionLaw::prescribed(VectorField::parse([&v[0], &v[1], &v[2]])?)
            }
            other => return Err(Error::Invalid(format!("unknown motion `{other}`"))),
        };
        Ok(match &m.tangential {
            Some(u) => law.with_tangential(VectorField::parse([&u[0], &u[1], &u[2]])?),
            None => law,
        })
    }

    pub fn pressure_law(&self) -> Result<PressureLaw> {
        PressureLaw::by_name(&self.pressure.law, &self.pressure.params)
    }

    pub fn flux_law(&self) -> Result<FluxLaw> {
        FluxLaw::by_name(&self.flux.law, &self.flux.params)
    }

    /// A configured scalar field, or `default` when absent.
    pub fn scalar(&self, spec: &Option<String>, default: &str) -> Result<ScalarField> {
        scalar_field(spec.as_deref().unwrap_or(default))
    }

    pub fn vector(&self, spec: &Option<VectorSpec>, default: &str) -> Result<VectorField> {
        match spec {
            Some(s) => vector_field(s),
            None => vector_field(&VectorSpec::Builtin(default.into())),
        }
    }
}

/// Splits `name(a, b)` into the name and its numeric arguments.
fn call(src: &str) -> Option<(&str, Vec<f64>)> {
    let s = src.trim();
    let (name, rest) = match s.find('(') {
        Some(i) => (&s[..i], &s[i..]),
        None => (s, ""),
    };
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphabetic() || c == '_' || c == '-') {
        return None;
    }
    if rest.is_empty() {
        return Some((name, vec![]));
    }
    let inner = rest.strip_prefix('(')?.strip_suffix(')')?;
    if inner.trim().is_empty() {
        return Some((name, vec![]));
    }
    let args: std::result::Result<Vec<f64>, _> = inner.split(',').map(|a| a.trim().parse::<f64>()).collect();
    Some((name, args.ok()?))
}

/// A built-in scalar field name or an expression.
pub fn scalar_field(src: &str) -> Result<ScalarField> {
    if let Some((name, args)) = call(src) {
        match (name, args.as_slice()) {
            ("zero", []) => return Ok(ScalarField::constant(0.0)),
            ("one", []) => return Ok(ScalarField::constant(1.0)),
            ("constant", [c]) => return Ok(ScalarField::constant(*c)),
            ("height", []) => return Ok(ScalarField::new(Expr::x(2))),
            _ => {}
        }
    }
    ScalarField::parse(src)
}

pub fn vector_field(spec: &VectorSpec) -> Result<VectorField> {
    match spec {
        VectorSpec::Components(c) => VectorField::parse([&c[0], &c[1], &c[2]]),
        VectorSpec::Builtin(src) => {
            let (name, args) = call(src).ok_or_else(|| Error::Invalid(format!("unknown vector field `{src}`")))?;
            match (name, args.as_slice()) {
                ("zero", []) => Ok(VectorField::zero()),
                ("position", []) => Ok(VectorField::position()),
                ("constant", [a, b, c]) => Ok(VectorField::constant([*a, *b, *c])),
                ("rotation", [a, b, c]) => Ok(VectorField::rotation([*a, *b, *c])),
                ("dilation", []) => Ok(MotionLaw::dilation().velocity),
                _ => Err(Error::Invalid(format!("unknown vector field `{src}`"))),
            }
        }
    }
}

/// One entry of the built-in catalog.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Builtin {
    pub category: &'static str,
    pub name: &'static str,
    pub signature: &'static str,
    pub description: &'static str,
}

pub fn list_builtins() -> Vec<Builtin> {
    let b = |category, name, signature, description| Builtin { category, name, signature, description };
    vec![
        b("surface", "plane", "plane()", "unit square patch of x3 = 0 (not closed)"),
        b("surface", "sphere", "sphere(R = 1)", "two rotated latitude-longitude charts"),
        b("surface", "torus", "torus(R = 2, r = 0.5)", "one doubly periodic chart"),
        b("motion", "static", "static()", "v = 0"),
        b("motion", "translation", "translation(c1, c2, c3)", "v = c"),
        b("motion", "rotation", "rotation(w1, w2, w3)", "v = w × x"),
        b("motion", "dilation", "dilation()", "v = x / (1 + t)"),
        b("motion", "prescribed", "prescribed(velocity = [v1, v2, v3])", "analytic velocity"),
        b("field", "zero", "zero()", "scalar or vector zero"),
        b("field", "one", "one()", "scalar 1"),
        b("field", "constant", "constant(c) | constant(c1, c2, c3)", "constant scalar or vector"),
        b("field", "height", "height()", "scalar x3"),
        b("field", "position", "position()", "vector x"),
        b("field", "rotation", "rotation(w1, w2, w3)", "vector w × x"),
        b("field", "dilation", "dilation()", "vector x / (1 + t)"),
        b("field", "expression", "\"<expr in x1, x2, x3, t>\"", "+ - * / ^, sin, cos, exp, ln, sqrt"),
        b("family", "quadratic", "quadratic", "random quadratic polynomials, affine in t"),
        b("family", "cubic", "cubic", "random cubic polynomials"),
        b("family", "trigonometric", "trigonometric", "random sums of sines"),
        b("family", "exp-poly", "exp-poly", "exponential of a linear form times a linear polynomial"),
        b("family", "mixed", "mixed", "products and quotients of the other families"),
        b("pressure", "linear", "linear(k = 1)", "p = kρ"),
        b("pressure", "quadratic", "quadratic()", "p = ρ²"),
        b("pressure", "polytropic", "polytropic(k = 1, gamma = 1.4)", "p = kρ^γ"),
        b("flux", "linear", "linear(kappa = 1)", "e_J(ζ) = κζ"),
        b("flux", "quadratic", "quadratic()", "e_J(ζ) = ζ²"),
        b("flux", "power", "power(c = 1, m = 1.5)", "e_J(ζ) = cζ^m"),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "name = \"m\"\n[surface]\nkind = \"sphere\"\n";

    #[test]
    fn minimal_scenario_uses_defaults() {
        let s = Scenario::parse(MINIMAL).unwrap();
        assert_eq!(s.seed, 1);
        assert_eq!(s.variations.eps, EPS_LADDER.to_vec());
        assert_eq!(s.tolerances.identity, 1e-9);
        assert_eq!(s.selected_suites(None).unwrap().len(), SUITES.len());
        assert_eq!(s.time.steps(), 500);
    }

    #[test]
    fn missing_surface_names_the_key() {
        let err = Scenario::parse("name = \"m\"\n").unwrap_err();
        assert!(err.to_string().contains("surface"), "{err}");
        assert!(matches!(err, Error::Config { .. }));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let src = format!("{MINIMAL}[time]\ndt = -1.0\n");
        match Scenario::parse(&src).unwrap_err() {
            Error::Config { line, .. } => assert_eq!(line, 5),
            e => panic!("{e}"),
        }
        match Scenario::parse(&format!("{MINIMAL}[grid]\nresolutions = [16]\n")).unwrap_err() {
            Error::Config { line, msg } => assert!(line == 5 && msg.contains("24"), "{line} {msg}"),
            e => panic!("{e}"),
        }
        match Scenario::parse(&format!("{MINIMAL}bogus = 3\n")).unwrap_err() {
            Error::Config { line, .. } => assert_eq!(line, 4),
            e => panic!("{e}"),
        }
        let bad_expr = format!("{MINIMAL}[fields]\nrho0 = \"1 + \"\n");
        assert!(matches!(Scenario::parse(&bad_expr).unwrap_err(), Error::Config { line: 5, .. }));
    }

    #[test]
    fn builtin_fields_and_expressions() {
        let x = [0.3, -0.2, 0.9];
        assert_eq!(scalar_field("height").unwrap().value(&x, 0.0), 0.9);
        assert_eq!(scalar_field("constant(2.5)").unwrap().value(&x, 0.0), 2.5);
        assert!((scalar_field("x1*x2 + t").unwrap().value(&x, 1.0) - 0.94).abs() < 1e-15);
        let r = vector_field(&VectorSpec::Builtin("rotation(0, 0, 1)".into())).unwrap();
        assert_eq!(r.value(&x, 0.0), [0.2, 0.3, 0.0]);
        assert!(vector_field(&VectorSpec::Builtin("spin".into())).is_err());
    }

    #[test]
    fn catalog_lists_required_names() {
        let cat = list_builtins();
        let has = |c: &str, n: &str| cat.iter().any(|b| b.category == c && b.name == n);
        assert!(has("surface", "sphere") && has("surface", "torus") && has("flux", "quadratic"));
    }
}
