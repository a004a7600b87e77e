//! Flow maps of evolving surfaces on reference quadrature nodes, exact
//! scalar transport, and checks of the Jacobian rate and transport theorem.
//!
//! Each node carries a 17-point stencil of material points around its
//! reference coordinate. Advancing the stencil with the velocity field and
//! differencing it in `X` gives the chart jet of `x̃(·, t)` at the node, so
//! the metric, `√J` and the normal follow the flow without a separate ODE.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::field::{ScalarField, VectorField};
use crate::geometry::{seeded_frame, ChartAtlas, ChartJet, MetricState, QuadratureRule, JAC_EPS, STENCIL};
use crate::linalg::{dot, V3};
use crate::surface_ops::{ambient_div, SurfacePoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MotionKind {
    Static,
    Rigid,
    Dilation,
    Prescribed,
}

/// Velocity of the surface points, optionally split into a tangential part
/// `u` and a remainder `w = v − u`.
#[derive(Clone, Debug, PartialEq)]
pub struct MotionLaw {
    pub velocity: VectorField,
    pub tangential: Option<VectorField>,
    pub kind: MotionKind,
}

impl MotionLaw {
    pub fn fixed() -> Self {
        MotionLaw { velocity: VectorField::zero(), tangential: None, kind: MotionKind::Static }
    }

    pub fn translation(c: [f64; 3]) -> Self {
        MotionLaw { velocity: VectorField::constant(c), tangential: None, kind: MotionKind::Rigid }
    }

    pub fn rotation(w: [f64; 3]) -> Self {
        MotionLaw { velocity: VectorField::rotation(w), tangential: None, kind: MotionKind::Rigid }
    }

    /// `v = x / (1 + t)`; a sphere of radius `R` at `t = 0` has radius
    /// `R (1 + t)`.
    pub fn dilation() -> Self {
        let v = VectorField::new(std::array::from_fn(|i| Expr::x(i) / (1.0 + Expr::t())));
        MotionLaw { velocity: v, tangential: None, kind: MotionKind::Dilation }
    }

    pub fn prescribed(v: VectorField) -> Self {
        MotionLaw { velocity: v, tangential: None, kind: MotionKind::Prescribed }
    }

    pub fn with_tangential(mut self, u: VectorField) -> Self {
        self.tangential = Some(u);
        self
    }

    /// Largest `|u · n|` over the given points; zero without a split.
    pub fn split_defect(&self, points: &[SurfacePoint]) -> f64 {
        let Some(u) = &self.tangential else { return 0.0 };
        points.iter().map(|p| dot(&u.value(&p.x(), p.t), &p.n()).abs()).fold(0.0, f64::max)
    }
}

/// One reference node and its material stencil.
#[derive(Clone, Debug)]
pub struct FlowNode {
    pub chart: usize,
    pub coords: [f64; 2],
    /// Reference quadrature weight, without the partition of unity or `√J`.
    pub weight: f64,
    pub pou: f64,
    pub h: [f64; 2],
    pub orientation: f64,
    pub pts: [V3<f64>; 17],
    /// Stencil at the initial time.
    pub pts0: [V3<f64>; 17],
    pub x0: V3<f64>,
    pub sqrt_j0: f64,
    /// `∫₀ᵗ ℱ_k √J dτ` for each registered source.
    pub acc: Vec<f64>,
}

impl FlowNode {
    pub fn x(&self) -> V3<f64> {
        self.pts[0]
    }

    pub fn jet(&self) -> ChartJet {
        ChartJet::from_stencil(&self.pts, self.h)
    }

    pub fn sqrt_j(&self) -> f64 {
        jacobian(&self.jet()).sqrt()
    }

    pub fn metric(&self) -> Result<MetricState> {
        MetricState::from_jet(&self.jet(), self.orientation, self.coords)
    }

    pub fn point(&self, t: f64) -> Result<SurfacePoint> {
        let jet = self.jet();
        let frame = seeded_frame(&jet, self.orientation, self.coords)?;
        Ok(SurfacePoint::from_parts(frame, MetricState::from_jet(&jet, self.orientation, self.coords)?, t))
    }

    /// Effective surface quadrature weight `w Ψ̃ √J`.
    pub fn surface_weight(&self) -> f64 {
        self.weight * self.pou * self.sqrt_j()
    }
}

fn jacobian(jet: &ChartJet) -> f64 {
    let g = &jet.d1;
    let (a, b, c) = (dot(&g[0], &g[0]), dot(&g[0], &g[1]), dot(&g[1], &g[1]));
    a * c - b * b
}

/// Discretized flow map on the nodes of a quadrature rule.
#[derive(Clone, Debug)]
pub struct FlowState {
    pub t: f64,
    pub nodes: Vec<FlowNode>,
    pub sources: Vec<ScalarField>,
}

impl FlowState {
    /// Flow at `t0` starting from the atlas parametrization; nodes with zero
    /// partition-of-unity weight are dropped.
    pub fn new(atlas: &ChartAtlas, rule: &QuadratureRule, t0: f64, sources: Vec<ScalarField>) -> Result<FlowState> {
        let mut nodes = Vec::new();
        for q in &rule.nodes {
            let chart = &atlas.charts[q.chart];
            let pou = chart.pou_at(q.coords);
            if pou == 0.0 {
                continue;
            }
            let h = chart.fd_steps();
            let pts = STENCIL.map(|o| chart.position([q.coords[0] + o[0] * h[0], q.coords[1] + o[1] * h[1]]));
            let jet = ChartJet::from_stencil(&pts, h);
            let j = jacobian(&jet);
            if !(j > JAC_EPS) {
                return Err(Error::SingularMetric { jac: j, coords: q.coords, threshold: JAC_EPS });
            }
            nodes.push(FlowNode {
                chart: q.chart,
                coords: q.coords,
                weight: q.weight,
                pou,
                h,
                orientation: chart.orientation,
                pts,
                pts0: pts,
                x0: pts[0],
                sqrt_j0: j.sqrt(),
                acc: vec![0.0; sources.len()],
            });
        }
        Ok(FlowState { t: t0, nodes, sources })
    }

    pub fn min_jacobian(&self) -> f64 {
        self.nodes.iter().map(|n| n.sqrt_j().powi(2)).fold(f64::INFINITY, f64::min)
    }

    /// `∫ f dH²` on the current surface for node values `f`.
    pub fn integrate_values(&self, f: &[f64]) -> f64 {
        self.nodes.iter().zip(f).map(|(n, v)| n.surface_weight() * v).sum()
    }

    pub fn integrate(&self, f: &ScalarField) -> f64 {
        let vals: Vec<f64> = self.nodes.iter().map(|n| f.value(&n.x(), self.t)).collect();
        self.integrate_values(&vals)
    }

    pub fn points(&self) -> Result<Vec<SurfacePoint>> {
        self.nodes.iter().map(|n| n.point(self.t)).collect()
    }
}

fn node_rates(node: &FlowNode, pts: &[V3<f64>; 17], v: &VectorField, sources: &[ScalarField], t: f64) -> ([V3<f64>; 17], Vec<f64>) {
    let dp = pts.map(|p| v.value(&p, t));
    let sj = jacobian(&ChartJet::from_stencil(pts, node.h)).max(0.0).sqrt();
    let da = sources.iter().map(|s| s.value(&pts[0], t) * sj).collect();
    (dp, da)
}

/// One classical RK4 step of every material point, with the source
/// integrals accumulated from the same stages.
pub fn advance_flow(state: &FlowState, motion: &MotionLaw, dt: f64) -> Result<FlowState> {
    if !(dt > 0.0) {
        return Err(Error::Invalid(format!("time step must be positive, got {dt}")));
    }
    let t = state.t;
    let v = &motion.velocity;
    let mut out = state.clone();
    for (node, new) in state.nodes.iter().zip(out.nodes.iter_mut()) {
        let y0 = node.pts;
        let shift = |k: &[V3<f64>; 17], s: f64| -> [V3<f64>; 17] {
            std::array::from_fn(|m| std::array::from_fn(|i| y0[m][i] + s * k[m][i]))
        };
        let (k1, a1) = node_rates(node, &y0, v, &state.sources, t);
        let (k2, a2) = node_rates(node, &shift(&k1, 0.5 * dt), v, &state.sources, t + 0.5 * dt);
        let (k3, a3) = node_rates(node, &shift(&k2, 0.5 * dt), v, &state.sources, t + 0.5 * dt);
        let (k4, a4) = node_rates(node, &shift(&k3, dt), v, &state.sources, t + dt);
        new.pts = std::array::from_fn(|m| {
            std::array::from_fn(|i| y0[m][i] + dt / 6.0 * (k1[m][i] + 2.0 * k2[m][i] + 2.0 * k3[m][i] + k4[m][i]))
        });
        for k in 0..new.acc.len() {
            new.acc[k] += dt / 6.0 * (a1[k] + 2.0 * a2[k] + 2.0 * a3[k] + a4[k]);
        }
        let j = new.sqrt_j().powi(2);
        if !(j > JAC_EPS) {
            return Err(Error::JacobianCollapse { t: t + dt, jac: j });
        }
    }
    out.t = t + dt;
    Ok(out)
}

/// States at `t0, t0 + dt, …, t0 + steps·dt`.
pub fn integrate_flow(state: FlowState, motion: &MotionLaw, dt: f64, steps: usize) -> Result<Vec<FlowState>> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(state);
    for _ in 0..steps {
        let next = advance_flow(out.last().expect("nonempty"), motion, dt)?;
        out.push(next);
    }
    Ok(out)
}

/// `f(x̃(X,t),t) = {f₀(x̃(X,0)) √J(X,0) + ∫₀ᵗ ℱ√J dτ} / √J(X,t)` at every
/// node. `source` indexes the registered sources; `None` means `ℱ ≡ 0`.
pub fn transport_scalar(state: &FlowState, f0: &ScalarField, source: Option<usize>) -> Vec<f64> {
    state
        .nodes
        .iter()
        .map(|n| {
            let a = source.map_or(0.0, |k| n.acc[k]);
            (f0.value(&n.x0, 0.0) * n.sqrt_j0 + a) / n.sqrt_j()
        })
        .collect()
}

fn central5(y: &[f64; 5], dt: f64) -> f64 {
    (8.0 * (y[3] - y[1]) - (y[4] - y[0])) / (12.0 * dt)
}

fn five(states: &[FlowState]) -> Result<(&[FlowState; 5], f64)> {
    let s: &[FlowState; 5] = states
        .try_into()
        .map_err(|_| Error::Invalid("expected five consecutive flow states".into()))?;
    let dt = s[1].t - s[0].t;
    Ok((s, dt))
}

/// `max |∂_t√J − (div_Γ v)√J|` at the middle of five equally spaced states,
/// with `∂_t√J` from a fourth-order difference in time.
pub fn jacobian_rate_check(states: &[FlowState], motion: &MotionLaw) -> Result<f64> {
    let (s, dt) = five(states)?;
    let mid = &s[2];
    let mut worst = 0.0f64;
    for (k, node) in mid.nodes.iter().enumerate() {
        let y: [f64; 5] = std::array::from_fn(|m| s[m].nodes[k].sqrt_j());
        let m = node.metric()?;
        let div = ambient_div(&motion.velocity.jet(&m.x, mid.t), &m.projection);
        worst = worst.max((central5(&y, dt) - div * y[2]).abs());
    }
    Ok(worst)
}

/// Both sides of the transport theorem on a material region, at the middle
/// of five equally spaced states.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TransportCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs − rhs| / max(|rhs|, 1)`.
    pub residual: f64,
}

/// `d/dt ∫_{Ω(t)} f` against `∫_{Ω(t)} D_t f + (div_Γ v) f`, where `Ω(t)` is
/// weighted by `mask` evaluated at the reference position.
pub fn transport_theorem_check(
    states: &[FlowState],
    motion: &MotionLaw,
    f: &ScalarField,
    mask: &ScalarField,
) -> Result<TransportCheck> {
    let (s, dt) = five(states)?;
    let total = |st: &FlowState| -> f64 {
        st.nodes.iter().map(|n| n.surface_weight() * mask.value(&n.x0, 0.0) * f.value(&n.x(), st.t)).sum()
    };
    let y: [f64; 5] = std::array::from_fn(|m| total(&s[m]));
    let lhs = central5(&y, dt);
    let mid = &s[2];
    let mut rhs = 0.0;
    for node in &mid.nodes {
        let m = node.metric()?;
        let vj = motion.velocity.jet(&m.x, mid.t);
        let fj = f.jet(&m.x, mid.t);
        let dtf = fj.dt + dot(&vj.v, &fj.grad);
        let div = ambient_div(&vj, &m.projection);
        rhs += node.surface_weight() * mask.value(&node.x0, 0.0) * (dtf + div * fj.v);
    }
    Ok(TransportCheck { lhs, rhs, residual: (lhs - rhs).abs() / rhs.abs().max(1.0) })
}

/// Largest deviation of the flow from a closed-form trajectory `x̃(X,t)`
/// given as a function of the initial position.
pub fn trajectory_error(state: &FlowState, exact: impl Fn(&V3<f64>, f64) -> V3<f64>) -> f64 {
    let mut worst = 0.0f64;
    for n in &state.nodes {
        for (p, q0) in n.pts.iter().zip(&n.pts0) {
            let e = exact(q0, state.t);
            worst = worst.max((0..3).map(|i| (p[i] - e[i]).abs()).fold(0.0, f64::max));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ChartAtlas;

    fn sphere_flow(n: usize, sources: Vec<ScalarField>) -> FlowState {
        let atlas = ChartAtlas::sphere(1.0);
        FlowState::new(&atlas, &QuadratureRule::gauss(&atlas, n), 0.0, sources).unwrap()
    }

    #[test]
    fn translation_keeps_jacobian() {
        let s0 = sphere_flow(16, vec![]);
        let s = integrate_flow(s0.clone(), &MotionLaw::translation([0.5, -1.0, 2.0]), 0.1, 10).unwrap();
        let last = s.last().unwrap();
        for (a, b) in s0.nodes.iter().zip(&last.nodes) {
            assert!((a.sqrt_j() - b.sqrt_j()).abs() < 1e-12);
            assert!((b.x()[2] - a.x()[2] - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dilation_scales_the_jacobian() {
        let s = integrate_flow(sphere_flow(16, vec![]), &MotionLaw::dilation(), 0.05, 20).unwrap();
        let last = s.last().unwrap();
        for (a, b) in s[0].nodes.iter().zip(&last.nodes) {
            let ratio = b.sqrt_j().powi(2) / a.sqrt_j().powi(2);
            assert!((ratio - 16.0).abs() < 1e-6, "{ratio}");
        }
        let rho = transport_scalar(last, &ScalarField::constant(1.0), None);
        assert!(rho.iter().all(|r| (r - 0.25).abs() < 1e-7));
        let err = trajectory_error(last, |x, t| x.map(|c| c * (1.0 + t)));
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn constant_source_on_static_sphere() {
        let s = integrate_flow(sphere_flow(16, vec![ScalarField::constant(1.0)]), &MotionLaw::fixed(), 0.1, 7).unwrap();
        let rho = transport_scalar(s.last().unwrap(), &ScalarField::constant(0.0), Some(0));
        assert!(rho.iter().all(|r| (r - 0.7).abs() < 1e-12));
    }

    #[test]
    fn rotation_preserves_radius_and_area_element() {
        let s = integrate_flow(sphere_flow(16, vec![]), &MotionLaw::rotation([0.0, 0.0, 1.0]), 0.02, 50).unwrap();
        let last = s.last().unwrap();
        for (a, b) in s[0].nodes.iter().zip(&last.nodes) {
            assert!((dot(&b.x(), &b.x()).sqrt() - 1.0).abs() < 1e-9);
            assert!((a.sqrt_j() - b.sqrt_j()).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_nonpositive_steps() {
        assert!(advance_flow(&sphere_flow(16, vec![]), &MotionLaw::fixed(), 0.0).is_err());
    }
}
