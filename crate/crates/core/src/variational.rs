//! Finite-ε checks of first variations and dual representations of the
//! energy densities.
//!
//! Every functional is evaluated by the same quadrature at `v + εφ` (or on
//! the varied flow `x̃ + εỹ`) and its central difference is compared with the
//! closed-form first variation. Functionals that are quadratic in ε have an
//! exact central difference; for the others the error decays like ε².

use serde::Serialize;

use crate::ad::{Dual, D2};
use crate::error::{Error, Result};
use crate::evolving::{FlowNode, FlowState, MotionLaw};
use crate::field::{ScalarField, VectorField};
use crate::geometry::{samples, ChartAtlas, ChartJet, QuadratureRule};
use crate::laws::{FluxLaw, PressureLaw};
use crate::linalg::*;
use crate::surface_ops::{ambient_div, dissipation, strain, stress, SurfacePoint};

/// Default ε ladder.
pub const EPS_LADDER: [f64; 4] = [1e-2, 3e-3, 1e-3, 3e-4];

const ROUNDING: f64 = 1e-15;

/// Outcome of a finite-ε comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    /// The central differences agree for every ε: the functional is at most
    /// quadratic in ε.
    Exact,
    /// The central-difference error decays with a measurable slope.
    Converged,
    /// Some central-difference error is below the quadrature noise.
    QuadratureFloor,
}

#[derive(Clone, Debug, Serialize)]
pub struct VariationReport {
    pub name: String,
    pub eps: Vec<f64>,
    pub fd: Vec<f64>,
    pub analytic: f64,
    pub errors: Vec<f64>,
    /// Least-squares slope of `log error` against `log ε`.
    pub slope: Option<f64>,
    /// Richardson extrapolation of the two finest central differences.
    pub extrapolated: f64,
    /// `|extrapolated − analytic|`.
    pub mismatch: f64,
    /// Estimated quadrature noise of the comparison.
    pub noise: f64,
    pub verdict: Verdict,
}

impl VariationReport {
    /// `value_scale` bounds the magnitude of the functional values whose
    /// differences form `fd`; it sets the rounding floor.
    fn build(name: &str, eps: &[f64], fd: Vec<f64>, analytic: f64, noise: f64, value_scale: f64) -> VariationReport {
        let errors: Vec<f64> = fd.iter().map(|f| (f - analytic).abs()).collect();
        let n = eps.len();
        let extrapolated = richardson(eps, &fd);
        let eps_min = eps.iter().cloned().fold(f64::INFINITY, f64::min);
        let round = 64.0 * ROUNDING * value_scale.max(1e-300) / eps_min.min(1.0);
        let spread = fd.iter().map(|f| (f - fd[0]).abs()).fold(0.0, f64::max);
        let floor = noise.max(round);
        let slope = if errors.iter().all(|e| *e > floor) && n >= 2 { Some(fit_slope(eps, &errors)) } else { None };
        let verdict = if spread <= 4.0 * round {
            Verdict::Exact
        } else if slope.is_some() {
            Verdict::Converged
        } else {
            Verdict::QuadratureFloor
        };
        let mismatch = match verdict {
            Verdict::Exact => errors.iter().cloned().fold(0.0, f64::max),
            _ => (extrapolated - analytic).abs(),
        };
        VariationReport { name: name.to_string(), eps: eps.to_vec(), fd, analytic, errors, slope, extrapolated, mismatch, noise: floor, verdict }
    }

    /// `Err(QuadratureFloor)` when the comparison was inconclusive.
    pub fn require_conclusive(&self) -> Result<()> {
        if self.verdict == Verdict::QuadratureFloor {
            return Err(Error::QuadratureFloor { mismatch: self.mismatch, noise: self.noise });
        }
        Ok(())
    }

    /// Exact within `tol`, or converging with slope `2 ± slope_tol` and
    /// extrapolated mismatch within `tol`.
    pub fn passes(&self, tol: f64, slope_tol: f64) -> bool {
        match self.verdict {
            Verdict::Exact => self.mismatch <= tol,
            Verdict::Converged => self.slope.is_some_and(|s| (s - 2.0).abs() <= slope_tol) && self.mismatch <= tol,
            Verdict::QuadratureFloor => false,
        }
    }
}

fn fit_slope(eps: &[f64], err: &[f64]) -> f64 {
    let n = eps.len() as f64;
    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|e| e.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Richardson extrapolation of the two finest central differences.
fn richardson(eps: &[f64], fd: &[f64]) -> f64 {
    let n = eps.len();
    if n < 2 {
        return fd[0];
    }
    let (ea, eb) = (eps[n - 2], eps[n - 1]);
    (ea * ea * fd[n - 1] - eb * eb * fd[n - 2]) / (ea * ea - eb * eb)
}

/// Central differences and the largest functional magnitude evaluated.
fn central(f: impl Fn(f64) -> Result<f64>, eps: &[f64]) -> Result<(Vec<f64>, f64)> {
    let mut big = 0.0f64;
    let mut fd = Vec::with_capacity(eps.len());
    for &e in eps {
        let (a, b) = (f(e)?, f(-e)?);
        big = big.max(a.abs()).max(b.abs());
        fd.push((a - b) / (2.0 * e));
    }
    Ok((fd, big))
}

fn check_ladder(eps: &[f64]) -> Result<()> {
    if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Invalid("ε ladder must be nonempty and positive".into()));
    }
    Ok(())
}

/// Composite Simpson weights for `n` equally spaced samples with spacing `h`.
fn simpson(n: usize, h: f64) -> Result<Vec<f64>> {
    if n < 3 || n.is_multiple_of(2) {
        return Err(Error::Invalid(format!("Simpson's rule needs an odd number of at least 3 samples, got {n}")));
    }
    Ok((0..n)
        .map(|k| {
            let w = if k == 0 || k == n - 1 { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            w * h / 3.0
        })
        .collect())
}

fn time_step(states: &[FlowState]) -> Result<f64> {
    let dt = states[1].t - states[0].t;
    for w in states.windows(2) {
        if ((w[1].t - w[0].t) - dt).abs() > 1e-9 * dt.abs().max(1e-12) {
            return Err(Error::Invalid("flow history must be equally spaced in time".into()));
        }
    }
    Ok(dt)
}

/// `∂_α ln √J` from a chart jet.
fn log_sqrt_j_grad(jet: &ChartJet) -> [f64; 2] {
    let (g1, g2) = (&jet.d1, &jet.d2);
    let gram = [[dot(&g1[0], &g1[0]), dot(&g1[0], &g1[1])], [dot(&g1[1], &g1[0]), dot(&g1[1], &g1[1])]];
    let j = gram[0][0] * gram[1][1] - gram[0][1] * gram[1][0];
    let gi = [[gram[1][1] / j, -gram[0][1] / j], [-gram[1][0] / j, gram[0][0] / j]];
    std::array::from_fn(|c| {
        let mut s = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                s += gi[a][b] * (dot(&g2[c][a], &g1[b]) + dot(&g1[a], &g2[c][b]));
            }
        }
        0.5 * s
    })
}

/// Dual basis `g^α` and `√J` of a chart jet.
fn duals(jet: &ChartJet) -> ([V3<f64>; 2], f64, [[f64; 2]; 2]) {
    let g = &jet.d1;
    let gram = [[dot(&g[0], &g[0]), dot(&g[0], &g[1])], [dot(&g[1], &g[0]), dot(&g[1], &g[1])]];
    let j = gram[0][0] * gram[1][1] - gram[0][1] * gram[1][0];
    let gi = [[gram[1][1] / j, -gram[0][1] / j], [-gram[1][0] / j, gram[0][0] / j]];
    let up = std::array::from_fn(|a| std::array::from_fn(|i| gi[a][0] * g[0][i] + gi[a][1] * g[1][i]));
    (up, j.sqrt(), gi)
}

fn sqrt_j_of(pts: &[V3<f64>; 17], h: [f64; 2]) -> f64 {
    let g = ChartJet::from_stencil(pts, h).d1;
    let j = dot(&g[0], &g[0]) * dot(&g[1], &g[1]) - dot(&g[0], &g[1]).powi(2);
    j.max(0.0).sqrt()
}

/// Scalar values on the stencil of a node, differentiated along the chart.
fn scalar_chart_grad(node: &FlowNode, f: impl Fn(&V3<f64>) -> f64) -> [f64; 2] {
    let vals = node.pts.map(|p| [f(&p), 0.0, 0.0]);
    let d1 = ChartJet::from_stencil(&vals, node.h).d1;
    [d1[0][0], d1[1][0]]
}

/// Flow-map variation `ỹ(X,t) = z(x̃(X,t), t)`.
#[derive(Clone, Debug)]
pub struct VariationField {
    pub z: VectorField,
    /// Whether `z` is required to be tangent to the surface.
    pub tangential: bool,
}

impl VariationField {
    pub fn new(z: VectorField) -> Self {
        VariationField { z, tangential: false }
    }

    pub fn tangential(z: VectorField) -> Self {
        VariationField { z, tangential: true }
    }

    /// Checks `ỹ(X,0) = 0` on the first state and tangency on every state.
    pub fn validate(&self, states: &[FlowState]) -> Result<()> {
        let first = &states[0];
        for node in &first.nodes {
            let z = self.z.value(&node.x(), first.t);
            if norm(&z) > 1e-12 {
                return Err(Error::Invalid(format!("variation does not vanish at t = {}: |z| = {:e}", first.t, norm(&z))));
            }
        }
        if self.tangential {
            for s in states {
                for node in &s.nodes {
                    let n = node.metric()?.normal;
                    let zn = dot(&self.z.value(&node.x(), s.t), &n).abs();
                    if zn > 1e-12 {
                        return Err(Error::Invalid(format!("variation is not tangent at t = {}: |z·n| = {zn:e}", s.t)));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Reference density `ρ̃₀ = ρ₀(x̃(X,0)) √J(X,0)` of a node.
fn reference_density(node: &FlowNode, rho0: &ScalarField, t0: f64) -> f64 {
    rho0.value(&node.x0, t0) * node.sqrt_j0
}

fn action_slice(
    state: &FlowState,
    t0: f64,
    motion: &MotionLaw,
    rho0: &ScalarField,
    law: Option<&PressureLaw>,
    variation: Option<(&VectorField, f64)>,
) -> f64 {
    let t = state.t;
    let mut total = 0.0;
    for node in &state.nodes {
        let sj = node.sqrt_j();
        let wx = node.weight * node.pou;
        let r0 = reference_density(node, rho0, t0);
        let x = node.x();
        let v0 = motion.velocity.value(&x, t);
        let mut v = v0;
        let mut sj_eps = sj;
        if let Some((z, eps)) = variation {
            let zj = z.jet(&x, t);
            for j in 0..3 {
                v[j] += eps * (zj.dt[j] + (0..3).map(|i| v0[i] * zj.d[i][j]).sum::<f64>());
            }
            if law.is_some() {
                let pts = node.pts.map(|p| add(&p, &scale(&z.value(&p, t), eps)));
                sj_eps = sqrt_j_of(&pts, node.h);
            }
        }
        let mut dens = 0.5 * r0 * dot(&v, &v);
        if let Some(law) = law {
            dens -= law.p(r0 / sj_eps) * sj_eps;
        }
        total += wx * dens;
    }
    total
}

/// `A = −∫₀ᵀ∫ Ψ̃ {½ρ̃₀|x̃_t|² − p(ρ̃₀/√J)√J} dX dt` on a stored flow history,
/// Simpson's rule in time. Without a pressure law the pressure term is
/// dropped.
pub fn action_integral(
    states: &[FlowState],
    motion: &MotionLaw,
    rho0: &ScalarField,
    law: Option<&PressureLaw>,
) -> Result<f64> {
    varied_action(states, motion, rho0, law, None)
}

fn varied_action(
    states: &[FlowState],
    motion: &MotionLaw,
    rho0: &ScalarField,
    law: Option<&PressureLaw>,
    variation: Option<(&VectorField, f64)>,
) -> Result<f64> {
    let t0 = states[0].t;
    let slices: Vec<f64> = states.iter().map(|s| action_slice(s, t0, motion, rho0, law, variation)).collect();
    Ok(-simpson_sum(&slices, 1, time_step(states)?)?)
}

/// Simpson's rule over every `stride`-th slice.
fn simpson_sum(slices: &[f64], stride: usize, dt: f64) -> Result<f64> {
    let sub: Vec<f64> = slices.iter().step_by(stride).copied().collect();
    let w = simpson(sub.len(), dt * stride as f64)?;
    Ok(sub.iter().zip(&w).map(|(s, w)| s * w).sum())
}

/// The same action by surface quadrature of closed-form `ρ` and `v` on the
/// surfaces `atlas(t)`.
pub fn action_direct(
    atlas: impl Fn(f64) -> ChartAtlas,
    order: usize,
    times: &[f64],
    rho: &ScalarField,
    v: &VectorField,
    law: Option<&PressureLaw>,
) -> Result<f64> {
    let w = simpson(times.len(), times[1] - times[0])?;
    let mut total = 0.0;
    for (&t, w) in times.iter().zip(&w) {
        let a = atlas(t);
        let rule = QuadratureRule::gauss(&a, order);
        let mut slice = 0.0;
        for s in samples(&a, &rule, t)? {
            let x = s.metric.x;
            let r = rho.value(&x, t);
            let vv = v.value(&x, t);
            let mut dens = 0.5 * r * dot(&vv, &vv);
            if let Some(law) = law {
                dens -= law.p(r);
            }
            slice += s.weight * dens;
        }
        total += w * slice;
    }
    Ok(-total)
}

/// Integrand of the first variation of the action at one node:
/// `ρ D_t v + grad_Γ 𝔭 + 𝔭 H n` (pressure terms only with a law), projected
/// for tangential variations.
fn action_force(node: &FlowNode, t: f64, t0: f64, motion: &MotionLaw, rho0: &ScalarField, law: Option<&PressureLaw>, tangential: bool) -> Result<V3<f64>> {
    let m = node.metric()?;
    let x = m.x;
    let vj = motion.velocity.jet(&x, t);
    let acc: V3<f64> = std::array::from_fn(|j| vj.dt[j] + (0..3).map(|i| vj.v[i] * vj.d[i][j]).sum::<f64>());
    let sj = node.sqrt_j();
    let rho = reference_density(node, rho0, t0) / sj;
    let mut f = scale(&acc, rho);
    if let Some(law) = law {
        let jet = node.jet();
        let (gup, _, _) = duals(&jet);
        let jet0 = ChartJet::from_stencil(&node.pts0, node.h);
        let r0 = rho0.jet(&node.x0, t0);
        let dl = log_sqrt_j_grad(&jet);
        let dl0 = log_sqrt_j_grad(&jet0);
        let dlog: [f64; 2] = std::array::from_fn(|a| dot(&r0.grad, &jet0.d1[a]) / r0.v + dl0[a] - dl[a]);
        let grad_rho: V3<f64> = std::array::from_fn(|i| rho * (gup[0][i] * dlog[0] + gup[1][i] * dlog[1]));
        let pe = law.effective(rho);
        let slope = law.effective_slope(rho);
        for i in 0..3 {
            f[i] += slope * grad_rho[i] + pe * m.mean_curvature * m.normal[i];
        }
    }
    if tangential {
        f = matvec(&m.projection, &f);
    }
    Ok(f)
}

fn analytic_slices(
    states: &[FlowState],
    motion: &MotionLaw,
    rho0: &ScalarField,
    law: Option<&PressureLaw>,
    variation: &VariationField,
) -> Result<Vec<f64>> {
    let t0 = states[0].t;
    states
        .iter()
        .map(|s| {
            let mut slice = 0.0;
            for node in &s.nodes {
                let f = action_force(node, s.t, t0, motion, rho0, law, variation.tangential)?;
                slice += node.surface_weight() * dot(&f, &variation.z.value(&node.x(), s.t));
            }
            Ok(slice)
        })
        .collect()
}

/// Central differences of the action along `x̃ + εỹ` against
/// `∫₀ᵀ∫ (ρ D_t v + grad_Γ 𝔭 + 𝔭 H n)·z dH² dt` (pressure terms only with a
/// law; projected by `P` for tangential variations).
///
/// When the history allows halving the time resolution the noise is the
/// Richardson estimate of the time-quadrature part of the mismatch.
pub fn check_action_variation(
    states: &[FlowState],
    motion: &MotionLaw,
    rho0: &ScalarField,
    law: Option<&PressureLaw>,
    variation: &VariationField,
    eps: &[f64],
) -> Result<VariationReport> {
    check_ladder(eps)?;
    variation.validate(states)?;
    let dt = time_step(states)?;
    let t0 = states[0].t;
    let halvable = (states.len() - 1).is_multiple_of(4);
    let strides: &[usize] = if halvable { &[1, 2] } else { &[1] };
    let mut fd = vec![Vec::new(); strides.len()];
    let mut big = 0.0f64;
    for &e in eps {
        let side = |sign: f64| -> Vec<f64> {
            states.iter().map(|s| action_slice(s, t0, motion, rho0, law, Some((&variation.z, sign * e)))).collect()
        };
        let (plus, minus) = (side(1.0), side(-1.0));
        for (k, &stride) in strides.iter().enumerate() {
            let (a, b) = (-simpson_sum(&plus, stride, dt)?, -simpson_sum(&minus, stride, dt)?);
            if stride == 1 {
                big = big.max(a.abs()).max(b.abs());
            }
            fd[k].push((a - b) / (2.0 * e));
        }
    }
    let an = analytic_slices(states, motion, rho0, law, variation)?;
    let analytic = simpson_sum(&an, 1, dt)?;
    let noise = if halvable {
        let fine = richardson(eps, &fd[0]) - analytic;
        let coarse = richardson(eps, &fd[1]) - simpson_sum(&an, 2, dt)?;
        (fine - coarse).abs() / 15.0
    } else {
        0.0
    };
    let name = match (law.is_some(), variation.tangential) {
        (false, false) => "action_flow_map",
        (false, true) => "action_flow_map_tangential",
        (true, false) => "barotropic_action_flow_map",
        (true, true) => "barotropic_action_flow_map_tangential",
    };
    Ok(VariationReport::build(name, eps, fd.swap_remove(0), analytic, noise, big))
}

/// `|∫∫ f·Pz − ∫∫ Pf·z|` for the action force `f` over the flow history.
pub fn tangential_consistency(
    states: &[FlowState],
    motion: &MotionLaw,
    rho0: &ScalarField,
    law: Option<&PressureLaw>,
    z: &VectorField,
) -> Result<f64> {
    let t0 = states[0].t;
    let (mut a, mut b) = (0.0, 0.0);
    for s in states {
        for node in &s.nodes {
            let f = action_force(node, s.t, t0, motion, rho0, law, false)?;
            let p = node.metric()?.projection;
            let zv = z.value(&node.x(), s.t);
            let w = node.surface_weight();
            a += w * dot(&f, &matvec(&p, &zv));
            b += w * dot(&matvec(&p, &f), &zv);
        }
    }
    Ok((a - b).abs())
}

/// Largest `|d/dε J^ε − 2(g^α·∂ỹ/∂X_α) J|` over all nodes and states, the
/// ε-derivative from a Richardson-extrapolated central difference.
pub fn jacobian_variation_residual(states: &[FlowState], z: &VectorField, eps: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    for s in states {
        for node in &s.nodes {
            let jac = |e: f64| {
                let pts = node.pts.map(|p| add(&p, &scale(&z.value(&p, s.t), e)));
                sqrt_j_of(&pts, node.h).powi(2)
            };
            let d = |e: f64| (jac(e) - jac(-e)) / (2.0 * e);
            let fd = (4.0 * d(0.5 * eps) - d(eps)) / 3.0;
            let jet = node.jet();
            let (gup, sj, _) = duals(&jet);
            let zs = node.pts.map(|p| z.value(&p, s.t));
            let dz = ChartJet::from_stencil(&zs, node.h).d1;
            let exact = 2.0 * (dot(&gup[0], &dz[0]) + dot(&gup[1], &dz[1])) * sj * sj;
            worst = worst.max((fd - exact).abs());
        }
    }
    Ok(worst)
}

/// Inputs of the dissipation and work functionals at a fixed time.
#[derive(Clone, Debug)]
pub struct DissipationInputs {
    pub v: VectorField,
    pub sigma: ScalarField,
    pub mu: ScalarField,
    pub lambda: ScalarField,
    pub rho: ScalarField,
    pub force: VectorField,
}

struct VelocitySample {
    w: f64,
    p: SurfacePoint,
    v: V3<D2>,
    phi: V3<D2>,
    sigma: f64,
    mu: f64,
    lambda: f64,
    rho: f64,
    force: V3<f64>,
}

/// `(∇_Γ V)_ij = ∂_i^Γ V_j` of a chart-differentiated vector.
fn surface_grad(p: &SurfacePoint, v: &V3<D2>) -> M3<f64> {
    let cols: [V3<f64>; 3] = std::array::from_fn(|j| p.grad(v[j]));
    std::array::from_fn(|i| std::array::from_fn(|j| cols[j][i]))
}

fn dissipation_work_density(s: &VelocitySample, eps: f64) -> f64 {
    let v: V3<D2> = std::array::from_fn(|i| s.v[i] + s.phi[i] * eps);
    let gs = surface_grad(&s.p, &v);
    let proj = s.p.proj();
    let d_proj = sym(&matmul(&gs, &proj));
    let div = trace(&gs);
    let vr = v.map(|c| c.re);
    -0.5 * (2.0 * s.mu * ddot(&d_proj, &d_proj) + s.lambda * div * div) + s.sigma * div + s.rho * dot(&s.force, &vr)
}

/// Central differences of `E_D + E_W₁ + E_W₂` at `v + εφ` against
/// `∫ (div_Γ S + ρF)·φ dH²` (projected when `tangential`).
pub fn check_dissipation_work_variation(
    atlas: &ChartAtlas,
    rule: &QuadratureRule,
    inputs: &DissipationInputs,
    phi: &VectorField,
    tangential: bool,
    t: f64,
    eps: &[f64],
) -> Result<VariationReport> {
    check_ladder(eps)?;
    let mut pts = Vec::new();
    let mut analytic = 0.0;
    let mut abs_sum = 0.0;
    for s in samples(atlas, rule, t)? {
        let p = SurfacePoint::new(&atlas.charts[s.node.chart], s.node.coords, t)?;
        let (xd, td) = (p.xd(), p.td());
        let mut ph = phi.value(&xd, td);
        if tangential {
            ph = matvec(&p.frame.proj, &ph);
        }
        let x = p.x();
        let sample = VelocitySample {
            w: s.weight,
            v: inputs.v.value(&xd, td),
            phi: ph,
            sigma: inputs.sigma.value(&x, t),
            mu: inputs.mu.value(&x, t),
            lambda: inputs.lambda.value(&x, t),
            rho: inputs.rho.value(&x, t),
            force: inputs.force.value(&x, t),
            p,
        };
        // div_Γ S with S built on chart duals
        let jet = inputs.v.jet(&xd, td);
        let st = strain(&jet, &p.frame.proj);
        let sig = stress(&st, &p.frame.proj, inputs.sigma.value(&xd, td), inputs.mu.value(&xd, td), inputs.lambda.value(&xd, td));
        let mut f = add(&p.div_mat(&sig), &scale(&sample.force, sample.rho));
        if tangential {
            f = matvec(&p.proj(), &f);
        }
        let phr = sample.phi.map(|c| c.re);
        analytic += s.weight * dot(&f, &phr);
        abs_sum += s.weight * dot(&f, &phr).abs();
        pts.push(sample);
    }
    let (fd, big) = central(|e| Ok(pts.iter().map(|s| s.w * dissipation_work_density(s, e)).sum()), eps)?;
    let name = if tangential { "dissipation_work_tangential" } else { "dissipation_work" };
    Ok(VariationReport::build(name, eps, fd, analytic, ROUNDING * abs_sum, big))
}

/// Central differences of `E_GD[f] = −½∫ w e_J(|grad_Γ f|²)` at `f + εφ`
/// against `∫ div_Γ(w e_J′ grad_Γ f) φ dH²`, with the pointwise residual of
/// `∂𝓔_GD/∂ϑ = −w e_J′ ϑ` at `ϑ = grad_Γ f`.
#[derive(Clone, Debug, Serialize)]
pub struct FluxVariationReport {
    pub variation: VariationReport,
    pub pointwise_residual: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn check_flux_variation(
    atlas: &ChartAtlas,
    rule: &QuadratureRule,
    f: &ScalarField,
    flux: &FluxLaw,
    weight: &ScalarField,
    phi: &ScalarField,
    t: f64,
    eps: &[f64],
) -> Result<FluxVariationReport> {
    check_ladder(eps)?;
    if !f.has_second_derivatives() {
        return Err(Error::MissingDerivative("flux variation needs second derivatives of f".into()));
    }
    let mut parts = Vec::new();
    let mut analytic = 0.0;
    let mut abs_sum = 0.0;
    let mut pointwise = 0.0f64;
    for s in samples(atlas, rule, t)? {
        let p = SurfacePoint::new(&atlas.charts[s.node.chart], s.node.coords, t)?;
        let (xd, td) = (p.xd(), p.td());
        let gf = p.grad(f.value(&xd, td));
        let gphi = p.grad(phi.value(&xd, td));
        let x = p.x();
        let w = weight.value(&x, t);
        if !flux.is_linear() && norm(&gf) < 1e-8 {
            return Err(Error::DegenerateGradient { norm: norm(&gf) });
        }
        // div_Γ(w e_J′(ζ) P∇f) on chart duals
        let jet = f.jet(&xd, td);
        let g = matvec(&p.frame.proj, &jet.grad);
        let q = scale(&g, weight.value(&xd, td) * flux.de(dot(&g, &g)));
        let div = p.div(&q);
        let ph = phi.value(&x, t);
        analytic += s.weight * div * ph;
        abs_sum += s.weight * (div * ph).abs();
        // pointwise partials of the density in the dummy variables
        let th: [Dual<f64, 3>; 3] = std::array::from_fn(|i| Dual::var(gf[i], i));
        let dens = flux.e(dot(&th, &th)) * (-0.5 * w);
        let q_re = scale(&gf, w * flux.de(dot(&gf, &gf)));
        for i in 0..3 {
            pointwise = pointwise.max((dens.eps[i] + q_re[i]).abs());
        }
        parts.push((s.weight, w, gf, gphi));
    }
    let functional = |e: f64| -> Result<f64> {
        Ok(parts
            .iter()
            .map(|(sw, w, gf, gp)| {
                let g = add(gf, &scale(gp, e));
                -0.5 * sw * w * flux.e(dot(&g, &g))
            })
            .sum())
    };
    let (fd, big) = central(functional, eps)?;
    let name = format!("flux_variation_{}", flux.name());
    Ok(FluxVariationReport {
        variation: VariationReport::build(&name, eps, fd, analytic, ROUNDING * abs_sum, big),
        pointwise_residual: pointwise,
    })
}

/// Fields and coefficients for the energy representations. `rho` must be
/// the continuity solution with initial value `rho0`.
#[derive(Clone, Debug)]
pub struct RepresentationInputs {
    pub rho0: ScalarField,
    pub rho: ScalarField,
    pub motion: MotionLaw,
    pub e: ScalarField,
    pub sigma: ScalarField,
    pub theta: ScalarField,
    pub c: ScalarField,
    /// Argument of the general flux energy.
    pub f: ScalarField,
    pub mu: ScalarField,
    pub lambda: ScalarField,
    pub kappa: ScalarField,
    pub nu: ScalarField,
    pub force: VectorField,
    pub law: PressureLaw,
    pub flux: FluxLaw,
}

/// Surface and reference-coordinate value of one energy.
#[derive(Clone, Debug, Serialize)]
pub struct RepresentationPair {
    pub name: &'static str,
    pub surface: f64,
    pub reference: f64,
    /// `|surface − reference| / |surface|`, or the absolute difference when
    /// `|surface|` is below `1e-12`.
    pub mismatch: f64,
}

pub const ENERGY_NAMES: [&str; 9] = ["e_K", "e_A", "e_B", "e_W2", "e_W1", "e_D", "e_TD", "e_SD", "e_J"];

/// Each energy as a surface integral of ambient operators and as a
/// reference-coordinate integral of metric kernels, on the nodes of `state`.
pub fn check_energy_representations(state: &FlowState, t0: f64, inp: &RepresentationInputs) -> Result<Vec<RepresentationPair>> {
    let t = state.t;
    let mut surf = [0.0; 9];
    let mut refr = [0.0; 9];
    for node in &state.nodes {
        let m = node.metric()?;
        let x = m.x;
        let w = node.surface_weight();
        // ambient route
        let rho = inp.rho.value(&x, t);
        let vj = inp.motion.velocity.jet(&x, t);
        let v = vj.v;
        let vv = dot(&v, &v);
        let e = inp.e.value(&x, t);
        let force = inp.force.value(&x, t);
        let (mu, lambda) = (inp.mu.value(&x, t), inp.lambda.value(&x, t));
        let st = strain(&vj, &m.projection);
        let div = ambient_div(&vj, &m.projection);
        let sgrad = |f: &ScalarField| {
            let g = matvec(&m.projection, &f.jet(&x, t).grad);
            dot(&g, &g)
        };
        let vals = [
            0.5 * rho * vv,
            rho * (0.5 * vv + e),
            0.5 * rho * vv - inp.law.p(rho),
            rho * dot(&force, &v),
            inp.sigma.value(&x, t) * div,
            0.5 * dissipation(&st, mu, lambda),
            0.5 * inp.kappa.value(&x, t) * sgrad(&inp.theta),
            0.5 * inp.nu.value(&x, t) * sgrad(&inp.c),
            0.5 * inp.flux.e(sgrad(&inp.f)),
        ];
        for k in 0..9 {
            surf[k] += w * vals[k];
        }
        // reference route
        let jet = node.jet();
        let (_, sj, gi) = duals(&jet);
        let r = reference_density(node, &inp.rho0, t0) / sj;
        let xt = inp.motion.velocity.value(&x, t);
        let xt2 = dot(&xt, &xt);
        let vs = node.pts.map(|p| inp.motion.velocity.value(&p, t));
        let gdot_vec = ChartJet::from_stencil(&vs, node.h).d1;
        let g = &jet.d1;
        let gdot: [[f64; 2]; 2] = std::array::from_fn(|a| std::array::from_fn(|b| dot(&gdot_vec[a], &g[b]) + dot(&g[a], &gdot_vec[b])));
        let (mut tr, mut full) = (0.0, 0.0);
        for a in 0..2 {
            for b in 0..2 {
                tr += gdot[a][b] * gi[a][b];
                for z in 0..2 {
                    for h in 0..2 {
                        full += gdot[a][b] * gdot[z][h] * gi[a][z] * gi[b][h];
                    }
                }
            }
        }
        let quad = |f: &ScalarField| {
            let d = scalar_chart_grad(node, |p| f.value(p, t));
            let mut s = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    s += gi[a][b] * d[a] * d[b];
                }
            }
            s
        };
        let kern = [
            0.5 * r * xt2,
            r * (0.5 * xt2 + e),
            0.5 * r * xt2 - inp.law.p(r),
            r * dot(&xt, &force),
            0.5 * inp.sigma.value(&x, t) * tr,
            0.5 * (0.5 * mu * full + 0.25 * lambda * tr * tr),
            0.5 * inp.kappa.value(&x, t) * quad(&inp.theta),
            0.5 * inp.nu.value(&x, t) * quad(&inp.c),
            0.5 * inp.flux.e(quad(&inp.f)),
        ];
        for k in 0..9 {
            refr[k] += w * kern[k];
        }
    }
    Ok((0..9)
        .map(|k| {
            let d = (surf[k] - refr[k]).abs();
            let mismatch = if surf[k].abs() < 1e-12 { d } else { d / surf[k].abs() };
            RepresentationPair { name: ENERGY_NAMES[k], surface: surf[k], reference: refr[k], mismatch }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolving::integrate_flow;
    use std::f64::consts::PI;

    fn sphere_flow(motion: &MotionLaw, t_end: f64, steps: usize, order: usize) -> Vec<FlowState> {
        let atlas = ChartAtlas::sphere(1.0);
        let rule = QuadratureRule::gauss(&atlas, order);
        let s0 = FlowState::new(&atlas, &rule, 0.0, vec![]).unwrap();
        integrate_flow(s0, motion, t_end / steps as f64, steps).unwrap()
    }

    #[test]
    fn simpson_weights() {
        let w = simpson(5, 0.25).unwrap();
        let xs = [0.0, 0.25, 0.5, 0.75, 1.0];
        let s: f64 = w.iter().zip(xs).map(|(w, x)| w * x * x * x).sum();
        assert!((s - 0.25).abs() < 1e-15);
        assert!(simpson(4, 0.1).is_err());
    }

    #[test]
    fn static_action_vanishes() {
        let m = MotionLaw::fixed();
        let states = sphere_flow(&m, 1.0, 4, 16);
        let a = action_integral(&states, &m, &ScalarField::constant(1.0), None).unwrap();
        assert_eq!(a, 0.0);
    }

    #[test]
    fn translation_action() {
        let c = [0.3, -0.4, 1.2];
        let m = MotionLaw::translation(c);
        let states = sphere_flow(&m, 1.0, 4, 32);
        let a = action_integral(&states, &m, &ScalarField::constant(1.0), None).unwrap();
        let exact = -0.5 * dot(&c, &c) * 4.0 * PI;
        assert!(((a - exact) / exact).abs() < 1e-8, "{a} {exact}");
    }

    #[test]
    fn zero_variation_has_zero_derivative() {
        let m = MotionLaw::dilation();
        let states = sphere_flow(&m, 0.5, 4, 16);
        let var = VariationField::new(VectorField::zero());
        let rep = check_action_variation(&states, &m, &ScalarField::constant(1.0), Some(&PressureLaw::Quadratic), &var, &[1e-2, 1e-3]).unwrap();
        assert_eq!(rep.analytic, 0.0);
        assert!(rep.fd.iter().all(|f| *f == 0.0));
        assert_eq!(rep.verdict, Verdict::Exact);
    }

    #[test]
    fn variation_must_vanish_initially() {
        let m = MotionLaw::fixed();
        let states = sphere_flow(&m, 0.5, 4, 16);
        let var = VariationField::new(VectorField::constant([1.0, 0.0, 0.0]));
        assert!(check_action_variation(&states, &m, &ScalarField::constant(1.0), None, &var, &[1e-2]).is_err());
    }

    #[test]
    fn slope_fit_recovers_power() {
        let eps = [1e-2, 3e-3, 1e-3];
        let err: Vec<f64> = eps.iter().map(|e| 5.0 * e * e).collect();
        assert!((fit_slope(&eps, &err) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn energy_kernels_for_dilation() {
        let m = MotionLaw::dilation();
        let atlas = ChartAtlas::sphere(1.0);
        let rule = QuadratureRule::gauss(&atlas, 48);
        let states = [FlowState::new(&atlas, &rule, 0.0, vec![]).unwrap()];
        let zero = ScalarField::constant(0.0);
        let inp = RepresentationInputs {
            rho0: ScalarField::constant(1.0),
            rho: ScalarField::constant(1.0),
            motion: m,
            e: zero.clone(),
            sigma: zero.clone(),
            theta: ScalarField::parse("x3").unwrap(),
            c: zero.clone(),
            f: zero.clone(),
            mu: ScalarField::constant(1.0),
            lambda: zero.clone(),
            kappa: ScalarField::constant(1.0),
            nu: zero,
            force: VectorField::zero(),
            law: PressureLaw::Quadratic,
            flux: FluxLaw::Linear { kappa: 1.0 },
        };
        let pairs = check_energy_representations(&states[0], 0.0, &inp).unwrap();
        let d = &pairs[5];
        assert!((d.surface - 8.0 * PI).abs() < 1e-8 && (d.reference - 8.0 * PI).abs() < 1e-8, "{d:?}");
        let td = &pairs[6];
        assert!((td.surface - 4.0 * PI / 3.0).abs() < 1e-8 && (td.reference - 4.0 * PI / 3.0).abs() < 1e-8, "{td:?}");
    }
}
