//! The verification and simulation suites run by the scenario runner.

use std::collections::VecDeque;
use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::config::Scenario;
use crate::error::{Error, Result};
use crate::evolving::{advance_flow, integrate_flow, jacobian_rate_check, transport_scalar, transport_theorem_check, trajectory_error, FlowState, MotionLaw};
use crate::expr::Expr;
use crate::families::{bounded, rng, scalar, vector, Family};
use crate::field::{ScalarField, VectorField};
use crate::fluid::{
    conservative_equivalence, residual_barotropic, residual_conservative, residual_full, residual_noncanonical,
    residual_tangential, thermo_quantities, BarotropicVariant, Coefficients, FluidFields,
};
use crate::geometry::{
    integrate, metric_at, normal_integral, projection_identity_residual, ChartAtlas, GeomDerivs, MetricState,
    QuadratureRule, SurfaceKind,
};
use crate::laws::{FluxLaw, PressureLaw};
use crate::linalg::{cross, dot, norm, scale, V3};
use crate::manufactured::{barotropic_rotation, dilating_normal_flow, dilating_sphere, dilating_thermo, in_reference, rotating_sphere};
use crate::runner::{Check, Dump, SuiteOutput, Table};
use crate::solvers::{
    conservation_report, run_scalar, sample_barotropic, sample_flow, step_barotropic_tangential, step_diffusion,
    BarotropicField, ConservationSample, GridField, ScalarProblem, SphereGrid,
};
use crate::surface_ops::{identity_residuals, integration_by_parts, stress_divergence_integral, IdentityFields, IdentityResiduals, SurfacePoint};
use crate::variational::{
    action_direct, action_integral, check_action_variation, check_dissipation_work_variation, check_energy_representations,
    check_flux_variation, jacobian_variation_residual, tangential_consistency, DissipationInputs, RepresentationInputs,
    VariationField, VariationReport, Verdict, ENERGY_NAMES,
};

/// Material weight of the transport-theorem region, read at the reference
/// position.
const REGION_MASK: &str = "exp(-4*(x3 - 0.3)^2)";
/// Variation direction of the action checks; quadratic in `x` with a
/// `t(1−t)` envelope.
const ACTION_VARIATION: [&str; 3] = ["t*(1-t)*(x3 + x1*x2 + 0.3)", "t*(1-t)*(x1 - x3^2)", "t*(1-t)*(x3*x1 + 0.5*x2)"];
/// Tangent variation on spheres about the origin: `t(1−t)(1 + x₃/2)(w × x)`.
const ACTION_VARIATION_TANGENT: [&str; 3] = [
    "t*(1-t)*(1 + 0.5*x3)*(-0.5*x3 - 0.8*x2)",
    "t*(1-t)*(1 + 0.5*x3)*(0.8*x1 - 0.3*x3)",
    "t*(1-t)*(1 + 0.5*x3)*(0.3*x2 + 0.5*x1)",
];
const ACTION_RHO0: &str = "1.5 + 0.3*x1 + 0.2*x2*x3 + 0.25*x3";
/// Time at which the fixed-time functionals are evaluated.
const CHECK_TIME: f64 = 0.3;

fn sphere_radius(atlas: &ChartAtlas, suite: &str) -> Result<f64> {
    match atlas.kind {
        SurfaceKind::Sphere { radius } => Ok(radius),
        _ => Err(Error::Invalid(format!("{suite} runs on a sphere"))),
    }
}

fn closed(atlas: &ChartAtlas, suite: &str) -> Result<()> {
    if atlas.is_closed() {
        Ok(())
    } else {
        Err(Error::Invalid(format!("{suite} needs a closed surface")))
    }
}

/// The expression with `t` frozen at 0.
fn steady(f: &ScalarField) -> Expr {
    f.expr.substitute(&[Expr::x(0), Expr::x(1), Expr::x(2)], &Expr::num(0.0))
}

/// A coefficient that must be a constant number.
fn constant(spec: &Option<String>, default: f64, key: &str) -> Result<f64> {
    match spec {
        None => Ok(default),
        Some(s) => Expr::parse(s)?
            .as_const()
            .ok_or_else(|| Error::Invalid(format!("`{key}` must be a constant in the residual suite"))),
    }
}

/// Uniform chart coordinates with nonzero partition weight.
fn random_coords(atlas: &ChartAtlas, n: usize, r: &mut ChaCha8Rng) -> Vec<(usize, [f64; 2])> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let k = r.gen_range(0..atlas.charts.len());
        let d = &atlas.charts[k].domain;
        let c = [d.lo[0] + d.extent(0) * r.gen::<f64>(), d.lo[1] + d.extent(1) * r.gen::<f64>()];
        if d.contains(c) && atlas.charts[k].pou_at(c) > 0.0 {
            out.push((k, c));
        }
    }
    out
}

fn exact_mean_curvature(kind: &SurfaceKind, c: [f64; 2]) -> f64 {
    match *kind {
        SurfaceKind::Plane => 0.0,
        SurfaceKind::Sphere { radius } => -2.0 / radius,
        SurfaceKind::Torus { major, minor } => -(1.0 / minor + c[1].cos() / (major + minor * c[1].cos())),
    }
}

/// Largest violation of `g^αβ g_βζ = δ`, `|n| = 1`, `n·g_α = 0`, `Pn = 0`,
/// `P² = P` and `tr P = 2`.
fn metric_invariants(m: &MetricState) -> f64 {
    let mut worst = 0.0f64;
    for a in 0..2 {
        for z in 0..2 {
            let s: f64 = (0..2).map(|b| m.inverse_gram[a][b] * m.gram[b][z]).sum();
            worst = worst.max((s - if a == z { 1.0 } else { 0.0 }).abs());
        }
        worst = worst.max(dot(&m.normal, &m.tangents[a]).abs() / norm(&m.tangents[a]));
    }
    worst = worst.max((norm(&m.normal) - 1.0).abs());
    let p = &m.projection;
    let mut tr = 0.0;
    for i in 0..3 {
        tr += p[i][i];
        let pn: f64 = (0..3).map(|k| p[i][k] * m.normal[k]).sum();
        worst = worst.max(pn.abs());
        for j in 0..3 {
            let pp: f64 = (0..3).map(|k| p[i][k] * p[k][j]).sum();
            worst = worst.max((pp - p[i][j]).abs());
        }
    }
    worst.max((tr - 2.0).abs())
}

pub(crate) fn verify_geometry(sc: &Scenario, seed: u64) -> Result<SuiteOutput> {
    let tol = &sc.tolerances;
    let atlas = sc.atlas()?;
    let mut out = SuiteOutput::default();
    if atlas.is_closed() {
        let rule = QuadratureRule::gauss(&atlas, sc.grid.quadrature);
        let area = integrate(&ScalarField::constant(1.0), &atlas, &rule, 0.0)?;
        let exact = match atlas.kind {
            SurfaceKind::Sphere { radius } => 4.0 * PI * radius * radius,
            SurfaceKind::Torus { major, minor } => 4.0 * PI * PI * major * minor,
            SurfaceKind::Plane => unreachable!("the plane patch is open"),
        };
        out.checks.push(Check::at_most("area", ((area - exact) / exact).abs(), tol.area));
        out.checks.push(Check::at_most("normal_integral", norm(&normal_integral(&atlas, &rule, 0.0)?), tol.normal_integral));
    }
    let orientation = match atlas.check_orientation() {
        Ok(()) => Check::at_most("orientation", 0.0, 0.0),
        Err(e) => Check::at_most("orientation", 1.0, 0.0).with_note(e.to_string()),
    };
    out.checks.push(orientation);

    let analytic = atlas.clone().with_derivs(GeomDerivs::Analytic);
    let fd = atlas.clone().with_derivs(GeomDerivs::FiniteDifference);
    let mut r = rng(seed);
    let mut table = Table::new("nodes", &["chart", "x1", "x2", "x3", "mean_curvature", "exact", "projection_residual"]);
    let (mut h_an, mut h_fd, mut proj, mut inv, mut pou) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (k, c) in random_coords(&atlas, sc.grid.points, &mut r) {
        let m = metric_at(&atlas.charts[k], c, 0.0)?;
        let exact = exact_mean_curvature(&atlas.kind, c);
        let pr = projection_identity_residual(&m);
        proj = proj.max(pr);
        inv = inv.max(metric_invariants(&m));
        pou = pou.max((atlas.pou_sum(&m.x) - 1.0).abs());
        h_an = h_an.max((metric_at(&analytic.charts[k], c, 0.0)?.mean_curvature - exact).abs());
        h_fd = h_fd.max((metric_at(&fd.charts[k], c, 0.0)?.mean_curvature - exact).abs());
        table.push_values(&[k as f64, m.x[0], m.x[1], m.x[2], m.mean_curvature, exact, pr]);
    }
    out.checks.push(Check::at_most("mean_curvature", h_an, tol.curvature));
    out.checks.push(Check::at_most("mean_curvature_fd", h_fd, tol.curvature_fd));
    out.checks.push(Check::at_most("projection_identity", proj, tol.projection));
    out.checks.push(Check::at_most("metric_invariants", inv, tol.metric));
    out.checks.push(Check::at_most("partition_of_unity", pou, tol.partition));
    out.tables.push(table);
    Ok(out)
}

pub(crate) fn verify_identities(sc: &Scenario, seed: u64) -> Result<SuiteOutput> {
    let tol = &sc.tolerances;
    let atlas = sc.atlas()?;
    let mut out = SuiteOutput::default();
    let mut r = rng(seed);
    let names = IdentityResiduals::default().entries().map(|e| e.0);
    let mut header = vec!["family"];
    header.extend(names);
    let mut table = Table::new("identities", &header);
    let mut all = IdentityResiduals::default();
    for fam in Family::ALL {
        let fields = IdentityFields {
            v: vector(fam, &mut r),
            phi: vector(fam, &mut r),
            g: scalar(fam, &mut r),
            mu: scalar(fam, &mut r),
            lambda: scalar(fam, &mut r),
        };
        let mut acc = IdentityResiduals::default();
        for (k, c) in random_coords(&atlas, sc.grid.points, &mut r) {
            let t = r.gen::<f64>();
            let p = SurfacePoint::new(&atlas.charts[k], c, t)?;
            acc.merge(&identity_residuals(&fields, &p)?);
        }
        let mut row = vec![fam.name().to_string()];
        row.extend(acc.entries().iter().map(|e| e.1.to_string()));
        table.push(row);
        all.merge(&acc);
    }
    for (name, v) in all.entries() {
        out.checks.push(Check::at_most(name, v, tol.identity));
    }
    out.tables.push(table);

    if atlas.is_closed() {
        let rule = QuadratureRule::gauss(&atlas, sc.grid.quadrature);
        let mut parts = Table::new("parts", &["pair", "family", "product", "divergence"]);
        let (mut prod, mut div) = (0.0f64, 0.0f64);
        for pair in 0..10 {
            let fam = Family::ALL[pair % Family::ALL.len()];
            let (f, g, phi) = (scalar(fam, &mut r), scalar(fam, &mut r), vector(fam, &mut r));
            let res = integration_by_parts(&atlas, &rule, &f, &g, &phi, CHECK_TIME)?;
            prod = prod.max(res.product);
            div = div.max(res.divergence);
            parts.push(vec![pair.to_string(), fam.name().into(), res.product.to_string(), res.divergence.to_string()]);
        }
        out.checks.push(Check::at_most("parts_product", prod, tol.integration_by_parts));
        out.checks.push(Check::at_most("parts_divergence", div, tol.integration_by_parts));
        out.tables.push(parts);
    }
    Ok(out)
}

/// Exact position at time `t` of the point starting at `X`.
type Trajectory = Box<dyn Fn(&V3<f64>, f64) -> V3<f64>>;

pub(crate) fn transport(sc: &Scenario) -> Result<SuiteOutput> {
    let tol = &sc.tolerances;
    let atlas = sc.atlas()?;
    let rule = QuadratureRule::gauss(&atlas, sc.grid.quadrature);
    let motion = sc.motion()?;
    let fs = &sc.fields;
    let rho0 = ScalarField::new(steady(&sc.scalar(&fs.rho0, "1")?));
    let f = sc.scalar(&fs.e, "1 + x1*x3 + t*x2^2")?;
    let mask = ScalarField::parse(REGION_MASK)?;
    let (dt, steps) = (sc.time.dt, sc.time.steps());
    let probe = (steps / 20).max(1);
    let mut out = SuiteOutput::default();

    let mut rows: Vec<(f64, f64, f64, Option<f64>)> = Vec::with_capacity(steps + 1);
    let mut window: VecDeque<FlowState> = VecDeque::with_capacity(5);
    let mass = |s: &FlowState| s.integrate_values(&transport_scalar(s, &rho0, None));
    let first = FlowState::new(&atlas, &rule, 0.0, vec![])?;
    let m0 = mass(&first);
    let (mut drift, mut jac, mut thm) = (0.0f64, 0.0f64, 0.0f64);
    rows.push((first.t, m0, first.min_jacobian(), None));
    window.push_back(first);
    for k in 1..=steps {
        let next = advance_flow(window.back().expect("nonempty"), &motion, dt)?;
        let m = mass(&next);
        drift = drift.max((m - m0).abs() / m0.abs().max(f64::MIN_POSITIVE));
        rows.push((next.t, m, next.min_jacobian(), None));
        if window.len() == 5 {
            window.pop_front();
        }
        window.push_back(next);
        if window.len() == 5 {
            let states = window.make_contiguous();
            let res = jacobian_rate_check(states, &motion)?;
            jac = jac.max(res);
            rows[k - 2].3 = Some(res);
            if (k - 2) % probe == 0 {
                thm = thm.max(transport_theorem_check(states, &motion, &f, &mask)?.residual);
            }
        }
    }
    out.checks.push(Check::at_most("mass_drift", drift, tol.mass_drift));
    out.checks.push(Check::at_most("jacobian_rate", jac, tol.jacobian_rate));
    out.checks.push(Check::at_most("transport_theorem", thm, tol.transport_theorem));
    let mut table = Table::new("series", &["t", "mass", "min_jacobian", "jacobian_rate_residual"]);
    for (t, m, j, res) in rows {
        table.push(vec![t.to_string(), m.to_string(), j.to_string(), res.map_or(String::new(), |v| v.to_string())]);
    }
    out.tables.push(table);

    // RK4 integrates x̃ = (1 + t)X exactly, so the order is measured on the
    // exponential dilation x̃ = eᵗX and on a rigid rotation
    let w = [0.3, -0.5, 0.8];
    let flows: [(&str, MotionLaw, Trajectory); 2] = [
        ("temporal_order", MotionLaw::prescribed(VectorField::position()), Box::new(|x0, t| scale(x0, t.exp()))),
        ("temporal_order_rotation", MotionLaw::rotation(w), Box::new(move |x0, t| rotate(x0, &w, t))),
    ];
    let coarse = QuadratureRule::gauss(&atlas, 8);
    let mut rk = Table::new("temporal_order", &["flow", "dt", "trajectory_error"]);
    for (name, law, exact) in &flows {
        let mut errs = Vec::new();
        for n in [10usize, 20, 40] {
            let states = integrate_flow(FlowState::new(&atlas, &coarse, 0.0, vec![])?, law, 1.0 / n as f64, n)?;
            let e = trajectory_error(states.last().expect("nonempty"), exact);
            rk.push(vec![name.to_string(), (1.0 / n as f64).to_string(), e.to_string()]);
            errs.push(e);
        }
        let order = errs.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min);
        out.checks.push(Check::at_least(*name, order, tol.time_order));
    }
    out.tables.push(rk);
    Ok(out)
}

/// `x` rotated by the angle `|w| t` about `w`.
fn rotate(x: &V3<f64>, w: &V3<f64>, t: f64) -> V3<f64> {
    let len = norm(w);
    let k = scale(w, 1.0 / len);
    let (s, c) = (len * t).sin_cos();
    let kx = cross(&k, x);
    let kd = dot(&k, x);
    std::array::from_fn(|i| x[i] * c + kx[i] * s + k[i] * kd * (1.0 - c))
}

/// Quadrature nodes of the sphere of radius `radius` as surface points.
fn sphere_points(radius: f64, t: f64) -> Result<Vec<SurfacePoint>> {
    let atlas = ChartAtlas::sphere(radius);
    QuadratureRule::gauss(&atlas, 8)
        .nodes
        .iter()
        .filter(|q| atlas.charts[q.chart].pou_at(q.coords) > 0.0)
        .map(|q| SurfacePoint::new(&atlas.charts[q.chart], q.coords, t))
        .collect()
}

/// Largest deviation of `𝔭 = ρp′ − p` and `d𝔭/dρ` from central differences.
fn pressure_consistency(law: &PressureLaw) -> f64 {
    let h = 1e-5;
    let mut worst = 0.0f64;
    for k in 0..=16 {
        let rho = 0.5 + 1.5 * k as f64 / 16.0;
        let dp = (law.p(rho + h) - law.p(rho - h)) / (2.0 * h);
        let slope = (law.effective(rho + h) - law.effective(rho - h)) / (2.0 * h);
        worst = worst.max((law.effective(rho) - (rho * dp - law.p(rho))).abs());
        worst = worst.max((law.effective_slope(rho) - slope).abs());
    }
    worst
}

pub(crate) fn residuals(sc: &Scenario, seed: u64) -> Result<SuiteOutput> {
    let tol = &sc.tolerances;
    let fs = &sc.fields;
    let rho0 = steady(&sc.scalar(&fs.rho0, "1 + 0.3*x1*x2 + 0.2*x3")?);
    let e0 = steady(&sc.scalar(&fs.e, "1 + x1^2")?);
    let mu = constant(&fs.mu, 1.0, "mu")?;
    let lambda = constant(&fs.lambda, 0.5, "lambda")?;
    let kappa = constant(&fs.kappa, 0.7, "kappa")?;
    let nu = constant(&fs.nu, 0.3, "nu")?;
    let sigma0 = constant(&fs.sigma, 0.8, "sigma")?;
    let times = [0.0, 0.25, 0.5];
    let mut out = SuiteOutput::default();
    let mut table = Table::new("residuals", &["check", "value"]);
    let mut push = |out: &mut SuiteOutput, c: Check| {
        table.push(vec![c.name.clone(), c.value.to_string()]);
        out.checks.push(c);
    };

    let dil = dilating_sphere(&rho0, &e0, mu, lambda, kappa, nu);
    let rot = rotating_sphere(1.3, mu, lambda, kappa, nu);
    let normal = dilating_normal_flow(&rho0, sigma0);
    let thermo = dilating_thermo(&rho0, mu, lambda, kappa);
    let baro = barotropic_rotation(1.2, 1.0);
    let mut w = [0.0f64; 12];
    for &t in &times {
        for p in sphere_points((dil.radius)(t), t)? {
            w[0] = w[0].max(residual_full(&dil.fields, &dil.coeffs, &p)?.max());
            w[1] = w[1].max(residual_conservative(&dil.fields, &dil.coeffs, &p)?.max());
            w[2] = w[2].max(conservative_equivalence(&dil.fields, &dil.coeffs, &p)?.max());
            w[3] = w[3].max(residual_noncanonical(&normal.fields, &normal.coeffs, &p)?.max());
            let th = thermo_quantities(&thermo.fields, &thermo.coeffs, &p)?;
            w[4] = w[4].max(th.enthalpy_residual.abs());
            w[5] = w[5].max(th.entropy_residual.abs()).max(th.gibbs_residual.abs());
            w[6] = w[6].max(th.free_energy_residual.abs());
        }
        for p in sphere_points(1.0, t)? {
            w[7] = w[7].max(residual_full(&rot.fields, &rot.coeffs, &p)?.max());
            let tr = residual_tangential(&rot.fields, &rot.coeffs, &p)?;
            w[8] = w[8].max(tr.lines.max()).max(tr.normal_velocity);
            w[9] = w[9].max(residual_noncanonical(&rot.fields, &rot.coeffs, &p)?.max());
            w[10] = w[10].max(residual_barotropic(&baro, &PressureLaw::Quadratic, &p, BarotropicVariant::Tangential)?.max());
        }
    }
    let laws = [PressureLaw::Linear { k: 2.0 }, PressureLaw::Quadratic, PressureLaw::Polytropic { k: 1.0, gamma: 1.4 }, sc.pressure_law()?];
    w[11] = laws.iter().map(pressure_consistency).fold(0.0, f64::max);
    push(&mut out, Check::at_most("dilating_full", w[0], tol.residual));
    push(&mut out, Check::at_most("dilating_conservative", w[1], tol.residual));
    push(&mut out, Check::at_most("dilating_equivalence", w[2], tol.equivalence));
    push(&mut out, Check::at_most("normal_flow_noncanonical", w[3], tol.residual));
    push(&mut out, Check::at_most("enthalpy", w[4], tol.residual));
    push(&mut out, Check::at_most("entropy_and_gibbs", w[5], tol.residual));
    push(&mut out, Check::at_most("free_energy_identity", w[6], tol.free_energy));
    push(&mut out, Check::at_most("rotating_full", w[7], tol.residual));
    push(&mut out, Check::at_most("rotating_tangential", w[8], tol.residual));
    push(&mut out, Check::at_most("rotating_noncanonical", w[9], tol.residual));
    push(&mut out, Check::at_most("barotropic_rotation", w[10], tol.residual));
    push(&mut out, Check::at_most("effective_pressure", w[11], tol.residual));

    // random states with nonnegative coefficients on the scenario surface
    let atlas = sc.atlas()?;
    let mut r = rng(seed);
    let (mut equiv, mut production) = (0.0f64, f64::INFINITY);
    let draws = sc.grid.draws.max(1);
    let per_draw = sc.grid.points.div_ceil(draws);
    for d in 0..draws {
        let fam = Family::ALL[d % Family::ALL.len()];
        let fields = FluidFields {
            rho: bounded(&mut r, 0.5, 2.0),
            v: vector(fam, &mut r),
            u: None,
            sigma: scalar(fam, &mut r),
            e: scalar(fam, &mut r),
            theta: bounded(&mut r, 0.5, 2.0),
            c: scalar(fam, &mut r),
            s: scalar(fam, &mut r),
        };
        let coeffs = Coefficients {
            mu: bounded(&mut r, 0.0, 2.0),
            lambda: bounded(&mut r, 0.0, 2.0),
            kappa: bounded(&mut r, 0.0, 2.0),
            nu: bounded(&mut r, 0.0, 2.0),
            c_theta: bounded(&mut r, 0.5, 2.0),
            force: vector(fam, &mut r),
            q_theta: scalar(fam, &mut r),
            q_c: scalar(fam, &mut r),
            ..Default::default()
        };
        for (k, c) in random_coords(&atlas, per_draw, &mut r) {
            let p = SurfacePoint::new(&atlas.charts[k], c, r.gen::<f64>())?;
            equiv = equiv.max(conservative_equivalence(&fields, &coeffs, &p)?.max());
            production = production.min(thermo_quantities(&fields, &coeffs, &p)?.entropy_production);
        }
    }
    push(&mut out, Check::at_most("random_equivalence", equiv, tol.equivalence));
    push(&mut out, Check::at_least("entropy_production", production, -tol.entropy_floor));
    out.tables.push(table);
    Ok(out)
}

#[derive(Clone, Copy, PartialEq)]
enum Scalar {
    Heat,
    Diffusion,
}

fn scalar_suite(sc: &Scenario, kind: Scalar) -> Result<SuiteOutput> {
    let tol = &sc.tolerances;
    let fs = &sc.fields;
    let label = if kind == Scalar::Heat { "simulate-heat" } else { "simulate-diffusion" };
    let radius = sphere_radius(&sc.atlas()?, label)?;
    let flux = sc.flux_law()?;
    let mut problem = if kind == Scalar::Heat { ScalarProblem::heat(flux) } else { ScalarProblem::diffusion(flux) };
    problem.motion = sc.motion()?;
    problem.rho0 = ScalarField::new(steady(&sc.scalar(&fs.rho0, "1")?));
    problem.c_theta = sc.scalar(&fs.c_theta, "1")?;
    problem.forcing = sc.scalar(&fs.forcing, "0")?;
    let (init, exact) = if kind == Scalar::Heat {
        problem.source = sc.scalar(&fs.q_theta, "0")?;
        (sc.scalar(&fs.theta0, "x3")?, fs.theta_exact.as_ref())
    } else {
        problem.source = sc.scalar(&fs.q_c, "0")?;
        (sc.scalar(&fs.c0, "x3")?, fs.c_exact.as_ref())
    };
    let exact = exact.map(|s| sc.scalar(&Some(s.clone()), "0")).transpose()?;
    let (t_end, steps) = (sc.time.t_end, sc.time.steps());
    let mut resolutions = sc.grid.resolutions.clone();
    resolutions.sort_unstable();
    resolutions.dedup();

    let mut out = SuiteOutput::default();
    let mut table = Table::new("convergence", &["n", "h", "steps", "relative_error", "integral", "integral_drift"]);
    let mut errors = Vec::new();
    let mut drift = 0.0f64;
    for &n in &resolutions {
        let grid = SphereGrid::new(radius, n)?;
        let f0 = GridField::new(&grid, &problem, &init, 0.0);
        // ∫(Q + ℱ) is the rate of ∫C on a closed surface
        let rate = |f: &GridField| -> f64 {
            let geom = f.geometry(&grid);
            let q = grid.sample(&geom, &problem.source, f.t);
            let g = grid.sample(&geom, &problem.forcing, f.t);
            let sum: [Vec<f64>; 2] = std::array::from_fn(|c| q[c].iter().zip(&g[c]).map(|(a, b)| a + b).collect());
            grid.integrate(&geom, &sum)
        };
        let abs0: [Vec<f64>; 2] = std::array::from_fn(|c| f0.values[c].iter().map(|v| v.abs()).collect());
        let scale0 = grid.integrate(&f0.geometry(&grid), &abs0).max(f64::MIN_POSITIVE);
        let i0 = f0.integral(&grid);
        let (mut budget, mut last_rate, mut last_t) = (0.0, rate(&f0), 0.0);
        let mut worst = 0.0f64;
        let diffusion = kind == Scalar::Diffusion;
        let field = run_scalar(&grid, f0, &problem, t_end, steps, |f| {
            if diffusion {
                let r = rate(f);
                budget += 0.5 * (f.t - last_t) * (r + last_rate);
                (last_rate, last_t) = (r, f.t);
                worst = worst.max((f.integral(&grid) - i0 - budget).abs() / scale0);
            }
        })?;
        let err = exact.as_ref().map(|e| field.relative_error(&grid, e));
        if let Some(e) = err {
            errors.push((grid.spacing(), e));
        }
        drift = drift.max(worst);
        table.push(vec![
            n.to_string(),
            grid.spacing().to_string(),
            steps.to_string(),
            err.map_or(String::new(), |e| e.to_string()),
            field.integral(&grid).to_string(),
            if diffusion { worst.to_string() } else { String::new() },
        ]);
        if sc.output.dumps {
            let stem = if kind == Scalar::Heat { "theta" } else { "concentration" };
            for c in 0..2 {
                out.dumps.push(Dump {
                    file: format!("{stem}_n{n}_chart{c}.bin"),
                    chart: c,
                    dims: grid.n,
                    t: field.t,
                    values: field.values[c].clone(),
                });
            }
        }
    }
    if let Some(&(_, e)) = errors.last() {
        out.checks.push(Check::at_most(format!("relative_error_n{}", resolutions.last().expect("nonempty")), e, tol.solver_error));
    }
    if errors.len() >= 2 {
        let order = errors.windows(2).map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln()).fold(f64::INFINITY, f64::min);
        out.checks.push(Check::at_least("spatial_order", order, tol.spatial_order));
    }
    if kind == Scalar::Diffusion {
        out.checks.push(Check::at_most("integral_drift", drift, tol.conservation));
    }
    out.tables.push(table);
    Ok(out)
}

pub(crate) fn simulate_heat(sc: &Scenario) -> Result<SuiteOutput> {
    scalar_suite(sc, Scalar::Heat)
}

pub(crate) fn simulate_diffusion(sc: &Scenario) -> Result<SuiteOutput> {
    scalar_suite(sc, Scalar::Diffusion)
}

/// Balanced density of the unit rotation about `e₃` plus a perturbation.
const BAROTROPIC_RHO0: &str = "1 - 0.25*x3^2 + 0.05*x1";

fn barotropic_run(
    grid: &SphereGrid,
    rho0: &ScalarField,
    v0: &VectorField,
    law: &PressureLaw,
    dt: f64,
    steps: usize,
) -> Result<(BarotropicField, Vec<ConservationSample>)> {
    let mut b = BarotropicField::new(grid, rho0, v0);
    let mut samples = vec![sample_barotropic(grid, &b, law)];
    for _ in 0..steps {
        b = step_barotropic_tangential(grid, &b, law, dt)?;
        samples.push(sample_barotropic(grid, &b, law));
    }
    Ok((b, samples))
}

fn series_table(name: &str, samples: &[ConservationSample]) -> Table {
    let mut t = Table::new(
        name,
        &["t", "mass", "momentum_1", "momentum_2", "momentum_3", "energy", "concentration", "angular_1", "angular_2", "angular_3"],
    );
    for s in samples {
        let mut row = vec![s.integrals.t];
        row.extend(s.integrals.values);
        t.push_values(&row);
    }
    t
}

pub(crate) fn simulate_barotropic(sc: &Scenario) -> Result<SuiteOutput> {
    let tol = &sc.tolerances;
    let radius = sphere_radius(&sc.atlas()?, "simulate-barotropic")?;
    let law = sc.pressure_law()?;
    let rho0 = sc.scalar(&sc.fields.rho0, BAROTROPIC_RHO0)?;
    let v0 = sc.vector(&sc.fields.v, "rotation(0, 0, 1)")?;
    let n = sc.grid.resolutions[0];
    let grid = SphereGrid::new(radius, n)?;
    let (last, samples) = barotropic_run(&grid, &rho0, &v0, &law, sc.time.dt, sc.time.steps())?;
    let rep = conservation_report(&samples);
    let mut out = SuiteOutput::default();
    out.checks.push(Check::at_most("mass_drift", rep.drift.mass, tol.conservation));
    out.checks.push(Check::at_most("energy_drift", rep.drift.energy, tol.conservation));
    out.checks.push(Check::at_most("angular_momentum_drift", rep.drift.angular_momentum, tol.conservation));
    out.tables.push(series_table("series", &samples));
    if sc.output.dumps {
        for c in 0..2 {
            out.dumps.push(Dump { file: format!("density_n{n}_chart{c}.bin"), chart: c, dims: grid.n, t: last.t, values: last.rho[c].clone() });
        }
    }
    Ok(out)
}

fn variation_table() -> Table {
    Table::new("variations", &["check", "eps", "fd", "analytic", "error"])
}

/// Mismatch check (failed when inconclusive) plus a slope check when the
/// errors converge.
fn push_variation(out: &mut SuiteOutput, table: &mut Table, rep: &VariationReport, name: &str, tol: f64, slope_tol: f64) {
    for k in 0..rep.eps.len() {
        table.push(vec![name.into(), rep.eps[k].to_string(), rep.fd[k].to_string(), rep.analytic.to_string(), rep.errors[k].to_string()]);
    }
    let verdict = match rep.verdict {
        Verdict::Exact => "exact",
        Verdict::Converged => "converged",
        Verdict::QuadratureFloor => "quadrature floor",
    };
    out.checks.push(
        Check::at_most(format!("{name}.mismatch"), rep.mismatch, tol)
            .fail_if(rep.verdict == Verdict::QuadratureFloor)
            .with_note(verdict),
    );
    if let (Verdict::Converged, Some(s)) = (rep.verdict, rep.slope) {
        out.checks.push(Check::within(format!("{name}.slope"), s, 2.0, slope_tol));
    }
}

pub(crate) fn check_variations(sc: &Scenario, seed: u64) -> Result<SuiteOutput> {
    let tol = &sc.tolerances;
    let vs = &sc.variations;
    let fs = &sc.fields;
    let law = sc.pressure_law()?;
    let mut out = SuiteOutput::default();
    let mut table = variation_table();

    // action functionals on the dilating unit sphere
    let sphere = ChartAtlas::sphere(1.0);
    let rule = QuadratureRule::gauss(&sphere, vs.action_order);
    let nt = vs.time_steps;
    let dt = 1.0 / nt as f64;
    let dilation = MotionLaw::dilation();
    let states = integrate_flow(FlowState::new(&sphere, &rule, 0.0, vec![])?, &dilation, dt, nt)?;
    let rho0_expr = steady(&sc.scalar(&fs.rho0, ACTION_RHO0)?);
    let rho0 = ScalarField::new(rho0_expr.clone());
    let z = VectorField::parse(ACTION_VARIATION)?;
    let zt = VectorField::parse(ACTION_VARIATION_TANGENT)?;
    for (with_law, tangential) in [(false, false), (false, true), (true, false), (true, true)] {
        let var = if tangential { VariationField::tangential(zt.clone()) } else { VariationField::new(z.clone()) };
        let rep = check_action_variation(&states, &dilation, &rho0, with_law.then_some(&law), &var, &vs.action_eps)?;
        let name = rep.name.clone();
        push_variation(&mut out, &mut table, &rep, &name, tol.action_variation, tol.slope);
    }

    // rigid translation with a variation orthogonal to the velocity
    let c = [0.3, -0.4, 1.2];
    let translation = MotionLaw::translation(c);
    let tstates = integrate_flow(FlowState::new(&sphere, &rule, 0.0, vec![])?, &translation, dt, nt)?;
    let shift = VariationField::new(VectorField::parse(["0.4*t", "0.3*t", "0"])?);
    let rep = check_action_variation(&tstates, &translation, &ScalarField::constant(1.0), None, &shift, &vs.action_eps)?;
    for k in 0..rep.eps.len() {
        table.push(vec!["action_translation".into(), rep.eps[k].to_string(), rep.fd[k].to_string(), rep.analytic.to_string(), rep.errors[k].to_string()]);
    }
    let fd_max = rep.fd.iter().map(|f| f.abs()).fold(0.0, f64::max);
    out.checks.push(Check::at_most("action_translation.fd", fd_max, tol.action_translation));
    out.checks.push(Check::at_most("action_translation.analytic", rep.analytic.abs(), tol.action_translation));

    // reference-coordinate action against surface quadrature of ρ and v
    let reference = action_integral(&states, &dilation, &rho0, Some(&law))?;
    let rho = ScalarField::new(in_reference(&rho0_expr) / (1.0 + Expr::t()).powi(2));
    let times: Vec<f64> = states.iter().map(|s| s.t).collect();
    let direct = action_direct(|t| ChartAtlas::sphere(1.0 + t), vs.action_order, &times, &rho, &dilation.velocity, Some(&law))?;
    out.checks.push(Check::at_most("action_representation", ((reference - direct) / direct).abs(), tol.action_representation));
    out.checks.push(Check::at_most(
        "tangential_consistency",
        tangential_consistency(&states, &dilation, &rho0, Some(&law), &z)?,
        tol.tangential_consistency,
    ));
    let jeps = vs.action_eps.iter().cloned().fold(f64::INFINITY, f64::min);
    out.checks.push(Check::at_most("jacobian_variation", jacobian_variation_residual(&states, &z, jeps)?, tol.jacobian_variation));

    // fixed-time functionals on the scenario surface
    let atlas = sc.atlas()?;
    closed(&atlas, "check-variations")?;
    let vrule = QuadratureRule::gauss(&atlas, vs.order);
    let mut r = rng(seed);
    for d in 0..sc.grid.draws {
        let inputs = DissipationInputs {
            v: vector(Family::Trigonometric, &mut r),
            sigma: scalar(Family::Cubic, &mut r),
            mu: sc.scalar(&fs.mu, "1")?,
            lambda: sc.scalar(&fs.lambda, "0.5")?,
            rho: bounded(&mut r, 0.5, 2.0),
            force: vector(Family::Quadratic, &mut r),
        };
        let phi = vector(Family::Mixed, &mut r);
        for tangential in [false, true] {
            let rep = check_dissipation_work_variation(&atlas, &vrule, &inputs, &phi, tangential, CHECK_TIME, &vs.eps)?;
            let name = format!("dissipation_work{}_draw{d}", if tangential { "_tangential" } else { "" });
            push_variation(&mut out, &mut table, &rep, &name, tol.dissipation_variation, tol.slope);
        }
    }
    let tension = DissipationInputs {
        v: vector(Family::Trigonometric, &mut r),
        sigma: ScalarField::constant(1.0),
        mu: ScalarField::constant(0.0),
        lambda: ScalarField::constant(0.0),
        rho: ScalarField::constant(1.0),
        force: VectorField::zero(),
    };
    let phi = vector(Family::Mixed, &mut r);
    let rep = check_dissipation_work_variation(&atlas, &vrule, &tension, &phi, false, CHECK_TIME, &vs.eps)?;
    push_variation(&mut out, &mut table, &rep, "surface_tension_work", tol.surface_tension, tol.slope);

    let one = ScalarField::constant(1.0);
    let phi = scalar(Family::ExpPoly, &mut r);
    let linear = check_flux_variation(&atlas, &vrule, &ScalarField::parse("x3")?, &FluxLaw::Linear { kappa: 1.0 }, &one, &phi, CHECK_TIME, &vs.eps)?;
    push_variation(&mut out, &mut table, &linear.variation, "flux_linear", tol.flux_linear, tol.slope);
    out.checks.push(Check::at_most("flux_linear.pointwise", linear.pointwise_residual, tol.flux_pointwise));
    let quad = check_flux_variation(&atlas, &vrule, &ScalarField::parse("x1 + 2*x3")?, &FluxLaw::Quadratic, &one, &phi, CHECK_TIME, &vs.action_eps)?;
    for k in 0..quad.variation.eps.len() {
        let v = &quad.variation;
        table.push(vec!["flux_quadratic".into(), v.eps[k].to_string(), v.fd[k].to_string(), v.analytic.to_string(), v.errors[k].to_string()]);
    }
    let slope = quad.variation.slope.unwrap_or(f64::NAN);
    out.checks.push(Check::within("flux_quadratic.slope", slope, 2.0, tol.slope).with_note(format!("{:?}", quad.variation.verdict).to_lowercase()));
    out.checks.push(Check::at_most("flux_quadratic.pointwise", quad.pointwise_residual, tol.flux_pointwise));
    out.tables.push(table);
    Ok(out)
}

pub(crate) fn check_representations(sc: &Scenario, seed: u64) -> Result<SuiteOutput> {
    let tol = &sc.tolerances;
    let atlas = sc.atlas()?;
    let rule = QuadratureRule::gauss(&atlas, sc.grid.quadrature);
    let dilation = MotionLaw::dilation();
    let steps = 30;
    let mut state = FlowState::new(&atlas, &rule, 0.0, vec![])?;
    for _ in 0..steps {
        state = advance_flow(&state, &dilation, CHECK_TIME / steps as f64)?;
    }
    let law = sc.pressure_law()?;
    let flux = sc.flux_law()?;
    let mut r = rng(seed);
    let mut worst = [0.0f64; 9];
    let mut table = Table::new("pairs", &["draw", "energy", "surface", "reference", "mismatch"]);
    for d in 0..sc.grid.draws {
        let fam = Family::ALL[d % Family::ALL.len()];
        let rho0 = steady(&bounded(&mut r, 0.5, 2.0));
        let inp = RepresentationInputs {
            rho0: ScalarField::new(rho0.clone()),
            // continuity solution under the dilation x̃ = (1 + t) X
            rho: ScalarField::new(in_reference(&rho0) / (1.0 + Expr::t()).powi(2)),
            motion: dilation.clone(),
            e: scalar(fam, &mut r),
            sigma: scalar(fam, &mut r),
            theta: scalar(fam, &mut r),
            c: scalar(fam, &mut r),
            f: scalar(fam, &mut r),
            mu: bounded(&mut r, 0.0, 2.0),
            lambda: bounded(&mut r, 0.0, 2.0),
            kappa: bounded(&mut r, 0.0, 2.0),
            nu: bounded(&mut r, 0.0, 2.0),
            force: vector(fam, &mut r),
            law,
            flux,
        };
        for (k, pair) in check_energy_representations(&state, 0.0, &inp)?.iter().enumerate() {
            worst[k] = worst[k].max(pair.mismatch);
            table.push(vec![d.to_string(), pair.name.into(), pair.surface.to_string(), pair.reference.to_string(), pair.mismatch.to_string()]);
        }
    }
    let mut out = SuiteOutput::default();
    for (name, w) in ENERGY_NAMES.iter().zip(worst) {
        out.checks.push(Check::at_most(*name, w, tol.representation));
    }
    out.tables.push(table);
    Ok(out)
}

pub(crate) fn conservation(sc: &Scenario, seed: u64) -> Result<SuiteOutput> {
    let tol = &sc.tolerances;
    let fs = &sc.fields;
    let (dt, steps) = (sc.time.dt, sc.time.steps());
    let n = sc.grid.resolutions[0];
    let mut out = SuiteOutput::default();

    // dilating unit sphere without forces or sources
    let sphere = ChartAtlas::sphere(1.0);
    let rule = QuadratureRule::gauss(&sphere, sc.grid.quadrature);
    let dilation = MotionLaw::dilation();
    let rho0 = ScalarField::new(steady(&sc.scalar(&fs.rho0, "1 + 0.3*x1 + 0.2*x3^2")?));
    let e = ScalarField::new(in_reference(&steady(&sc.scalar(&fs.e, "2 + x2")?)));
    let q_c = sc.scalar(&fs.q_c, "0")?;
    let (zero_v, zero_s) = (VectorField::zero(), ScalarField::constant(0.0));
    let grid = SphereGrid::new(1.0, n)?;
    let mut problem = ScalarProblem::diffusion(sc.flux_law()?);
    problem.motion = dilation.clone();
    problem.source = q_c.clone();
    let mut flow = FlowState::new(&sphere, &rule, 0.0, vec![])?;
    let mut conc = GridField::new(&grid, &problem, &sc.scalar(&fs.c0, "1 + x1*x3")?, 0.0);
    let sample = |flow: &FlowState, conc: &GridField| {
        sample_flow(flow, &rho0, &dilation, &e, &zero_v, &zero_s).with_concentration(&grid, conc, &q_c)
    };
    let mut samples = vec![sample(&flow, &conc)];
    for _ in 0..steps {
        flow = advance_flow(&flow, &dilation, dt)?;
        conc = step_diffusion(&grid, &conc, &problem, dt)?;
        samples.push(sample(&flow, &conc));
    }
    let rep = conservation_report(&samples);
    for (name, d) in rep.drift.entries() {
        out.checks.push(Check::at_most(format!("{name}_drift"), d, tol.conservation));
    }
    out.tables.push(series_table("flow", &samples));

    // a nontrivial angular momentum from a rotating barotropic layer
    let law = sc.pressure_law()?;
    let (_, bsamples) = barotropic_run(
        &grid,
        &ScalarField::parse(BAROTROPIC_RHO0)?,
        &VectorField::rotation([0.0, 0.0, 1.0]),
        &law,
        dt,
        steps,
    )?;
    let brep = conservation_report(&bsamples);
    out.checks.push(Check::at_most("barotropic_mass_drift", brep.drift.mass, tol.conservation));
    out.checks.push(Check::at_most("barotropic_energy_drift", brep.drift.energy, tol.conservation));
    out.checks.push(Check::at_most("barotropic_angular_momentum_drift", brep.drift.angular_momentum, tol.conservation));
    out.tables.push(series_table("barotropic", &bsamples));

    // total stress divergence vanishes on a closed surface
    let atlas = sc.atlas()?;
    closed(&atlas, "conservation-report")?;
    let srule = QuadratureRule::gauss(&atlas, sc.variations.order);
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for d in 0..sc.grid.draws {
        let fam = Family::ALL[d % Family::ALL.len()];
        let v = vector(fam, &mut r);
        let sigma = scalar(fam, &mut r);
        let (mu, lambda) = (bounded(&mut r, 0.5, 2.0), bounded(&mut r, 0.0, 1.0));
        worst = worst.max(norm(&stress_divergence_integral(&atlas, &srule, &v, &sigma, &mu, &lambda, CHECK_TIME)?));
    }
    out.checks.push(Check::at_most("stress_divergence", worst, tol.stress_divergence));
    Ok(out)
}
