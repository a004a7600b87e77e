//! Pointwise surface differential operators, strain and stress tensors, and
//! residuals of the standard surface-calculus identities.
//!
//! Every operator has an ambient form (`P ∇`) and a chart form
//! (`Σ_β g^β ∂/∂X_β` applied to a quantity restricted to the surface). The
//! chart form is what makes divergences of composite tensors such as `P g`
//! or `S v` computable: each composite is evaluated with dual numbers that
//! carry its derivatives along the chart.

use serde::Serialize;

use crate::ad::{Real, D2};
use crate::error::{Error, Result};
use crate::field::{ScalarField, VecJet, VectorField};
use crate::geometry::{metric_at, samples, Chart, ChartAtlas, Frame, MetricState, QuadratureRule};
use crate::linalg::*;

/// A surface point with its frame differentiated along the chart.
#[derive(Clone, Copy, Debug)]
pub struct SurfacePoint {
    pub frame: Frame<D2>,
    pub metric: MetricState,
    pub t: f64,
}

impl SurfacePoint {
    pub fn new(chart: &Chart, coords: [f64; 2], t: f64) -> Result<SurfacePoint> {
        let frame = chart.frame(coords)?;
        let metric = metric_at(chart, coords, t)?;
        Ok(SurfacePoint { frame, metric, t })
    }

    pub fn from_parts(frame: Frame<D2>, metric: MetricState, t: f64) -> SurfacePoint {
        SurfacePoint { frame, metric, t }
    }

    pub fn x(&self) -> V3<f64> {
        self.metric.x
    }

    pub fn n(&self) -> V3<f64> {
        self.metric.normal
    }

    pub fn proj(&self) -> M3<f64> {
        self.metric.projection
    }

    pub fn h(&self) -> f64 {
        self.metric.mean_curvature
    }

    /// Position carrying chart derivatives.
    pub fn xd(&self) -> V3<D2> {
        self.frame.x
    }

    pub fn td(&self) -> D2 {
        D2::cst(self.t)
    }

    /// `∂^Γ q` of a quantity carrying chart derivatives.
    pub fn grad(&self, q: D2) -> V3<f64> {
        let g = &self.frame.gup;
        std::array::from_fn(|i| g[0][i].re * q.eps[0] + g[1][i].re * q.eps[1])
    }

    /// `Σ_i ∂_i^Γ w_i`.
    pub fn div(&self, w: &V3<D2>) -> f64 {
        (0..3).map(|i| self.grad(w[i])[i]).sum()
    }

    /// Row-wise divergence `(Σ_j ∂_j^Γ M_ij)_i`.
    pub fn div_mat(&self, m: &M3<D2>) -> V3<f64> {
        std::array::from_fn(|i| self.div(&m[i]))
    }
}

/// `P ∇f`.
pub fn surface_gradient(f: &ScalarField, p: &SurfacePoint) -> V3<f64> {
    let j = f.jet(&p.x(), p.t);
    matvec(&p.proj(), &j.grad)
}

/// Chart form `Σ_β g^β ∂_β f`.
pub fn surface_gradient_chart(f: &ScalarField, p: &SurfacePoint) -> V3<f64> {
    p.grad(f.value(&p.xd(), p.td()))
}

/// Ambient form `(δ_ij − n_i n_j) ∂_j v_i`.
pub fn surface_divergence_vec(v: &VectorField, p: &SurfacePoint) -> f64 {
    let j = v.jet(&p.x(), p.t);
    ambient_div(&j, &p.proj())
}

/// Chart form `g^α · ∂v/∂X_α`.
pub fn surface_divergence_vec_chart(v: &VectorField, p: &SurfacePoint) -> f64 {
    p.div(&v.value(&p.xd(), p.td()))
}

/// Row-wise surface divergence of a matrix field.
pub fn surface_divergence_mat(m: &crate::field::MatrixField, p: &SurfacePoint) -> V3<f64> {
    p.div_mat(&m.value(&p.xd(), p.td()))
}

/// `Δ_Γ f = div_Γ grad_Γ f`.
pub fn laplace_beltrami(f: &ScalarField, p: &SurfacePoint) -> Result<f64> {
    require_second(f.has_second_derivatives(), "Laplace-Beltrami operand")?;
    let j = f.jet(&p.xd(), p.td());
    Ok(p.div(&matvec(&p.frame.proj, &j.grad)))
}

fn require_second(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::MissingDerivative(what.to_string()))
    }
}

/// `Σ_ij P_ij ∂_j v_i`.
pub fn ambient_div<T: Real>(j: &VecJet<T>, proj: &M3<T>) -> T {
    let mut s = T::zero();
    for i in 0..3 {
        for k in 0..3 {
            s += proj[i][k] * j.d[k][i];
        }
    }
    s
}

/// Strain tensors of a velocity jet.
#[derive(Clone, Copy, Debug)]
pub struct Strain<T> {
    /// `∇v`, entries `∂_i v_j`.
    pub grad: M3<T>,
    /// `∇_Γ v = P ∇v`.
    pub grad_s: M3<T>,
    pub d: M3<T>,
    /// Tangential strain `sym(∇_Γ v)`.
    pub d_tan: M3<T>,
    /// Projected strain `P D P`.
    pub d_proj: M3<T>,
    pub div: T,
}

pub fn strain<T: Real>(j: &VecJet<T>, proj: &M3<T>) -> Strain<T> {
    let grad = j.d;
    let grad_s = matmul(proj, &grad);
    let d = sym(&grad);
    Strain { grad, grad_s, d, d_tan: sym(&grad_s), d_proj: sandwich(proj, &d), div: trace(&grad_s) }
}

/// `S = 2μ D_Γ + λ P div_Γ v − P σ`.
pub fn stress<T: Real>(s: &Strain<T>, proj: &M3<T>, sigma: T, mu: T, lambda: T) -> M3<T> {
    std::array::from_fn(|i| {
        std::array::from_fn(|k| s.d_proj[i][k] * mu * 2.0 + proj[i][k] * (lambda * s.div - sigma))
    })
}

/// `2μ|D_Γ|² + λ(div_Γ v)²`.
pub fn dissipation<T: Real>(s: &Strain<T>, mu: T, lambda: T) -> T {
    mu * ddot(&s.d_proj, &s.d_proj) * 2.0 + lambda * s.div * s.div
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SurfaceTensors {
    pub grad_v: M3<f64>,
    pub div_v: f64,
    pub strain: M3<f64>,
    pub tangential_strain: M3<f64>,
    pub projected_strain: M3<f64>,
    pub stress: M3<f64>,
    /// Dissipation density `2μ|D_Γ|² + λ(div_Γ v)²`.
    pub dissipation: f64,
    /// Viscous energy density, half the dissipation density.
    pub viscous_energy: f64,
}

pub fn strain_and_stress(
    v: &VectorField,
    sigma: &ScalarField,
    mu: &ScalarField,
    lambda: &ScalarField,
    p: &SurfacePoint,
) -> SurfaceTensors {
    let (x, t) = (p.x(), p.t);
    let proj = p.proj();
    let s = strain(&v.jet(&x, t), &proj);
    let (mu, lambda) = (mu.value(&x, t), lambda.value(&x, t));
    let e = dissipation(&s, mu, lambda);
    SurfaceTensors {
        grad_v: s.grad,
        div_v: s.div,
        strain: s.d,
        tangential_strain: s.d_tan,
        projected_strain: s.d_proj,
        stress: stress(&s, &proj, sigma.value(&x, t), mu, lambda),
        dissipation: e,
        viscous_energy: 0.5 * e,
    }
}

/// Inputs of the identity residual kernel.
#[derive(Clone, Debug)]
pub struct IdentityFields {
    pub v: VectorField,
    pub phi: VectorField,
    pub g: ScalarField,
    pub mu: ScalarField,
    pub lambda: ScalarField,
}

/// Absolute residual of each identity at one point (max-abs over entries).
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct IdentityResiduals {
    /// `|P grad_Γ g − grad_Γ g|`
    pub gradient_projected: f64,
    /// `|n · grad_Γ g|`
    pub gradient_normal: f64,
    /// Ambient against chart form of `grad_Γ g`.
    pub gradient_chart: f64,
    /// Ambient against chart form of `div_Γ v`.
    pub divergence_chart: f64,
    /// `div_Γ(P g) = grad_Γ g + g H n`
    pub div_projector: f64,
    /// `P div_Γ(P g) = grad_Γ g`
    pub projected_div_projector: f64,
    /// `div_Γ((P g) v) = grad_Γ g · v + g H (n·v) + g div_Γ v`
    pub div_projector_vector: f64,
    /// `(v,∇)g = (v,∇_Γ)g + (v·n)(n,∇)g`
    pub directional_split: f64,
    /// `P D(v) P = P 𝔻_Γ(v) P`
    pub strain_projection: f64,
    /// `D_Γ(v) : D_Γ(φ) = D_Γ(v) : 𝔻_Γ(φ)`
    pub strain_contraction: f64,
    /// `div_Γ(μ D_Γ v) = div_Γ(μ D_Γ)·v + μ|D_Γ|²`
    pub viscous_product: f64,
    /// `div_Γ(λ P div_Γ v v) = div_Γ(λ P div_Γ v)·v + λ(div_Γ v)²`
    pub dilatational_product: f64,
    /// `div_Γ(S v) − div_Γ S · v = 2μ|D_Γ|² + λ(div_Γ v)² − g div_Γ v`
    pub stress_power: f64,
    /// `S : D_Γ = 2μ|D_Γ|² + λ(div_Γ v)² − g div_Γ v`
    pub stress_contraction: f64,
    /// `div_Γ((P g) v) − div_Γ(P g)·v = g div_Γ v`
    pub pressure_power: f64,
    /// `D_t^N g + div_Γ(g v) = D_t g + (div_Γ v) g`
    pub normal_time_derivative: f64,
    /// `D_t^N(g v) + div_Γ(g v ⊗ v) = {D_t g + (div_Γ v) g} v + g D_t v`
    pub momentum_time_derivative: f64,
}

impl IdentityResiduals {
    pub fn entries(&self) -> [(&'static str, f64); 17] {
        [
            ("gradient_projected", self.gradient_projected),
            ("gradient_normal", self.gradient_normal),
            ("gradient_chart", self.gradient_chart),
            ("divergence_chart", self.divergence_chart),
            ("div_projector", self.div_projector),
            ("projected_div_projector", self.projected_div_projector),
            ("div_projector_vector", self.div_projector_vector),
            ("directional_split", self.directional_split),
            ("strain_projection", self.strain_projection),
            ("strain_contraction", self.strain_contraction),
            ("viscous_product", self.viscous_product),
            ("dilatational_product", self.dilatational_product),
            ("stress_power", self.stress_power),
            ("stress_contraction", self.stress_contraction),
            ("pressure_power", self.pressure_power),
            ("normal_time_derivative", self.normal_time_derivative),
            ("momentum_time_derivative", self.momentum_time_derivative),
        ]
    }

    pub fn max(&self) -> f64 {
        self.entries().iter().fold(0.0, |m, e| m.max(e.1))
    }

    /// Entrywise maximum of two reports.
    pub fn merge(&mut self, o: &IdentityResiduals) {
        macro_rules! mx {
            ($($f:ident),*) => { $( self.$f = self.$f.max(o.$f); )* };
        }
        mx!(
            gradient_projected, gradient_normal, gradient_chart, divergence_chart, div_projector,
            projected_div_projector, div_projector_vector, directional_split, strain_projection,
            strain_contraction, viscous_product, dilatational_product, stress_power, stress_contraction,
            pressure_power, normal_time_derivative, momentum_time_derivative
        );
    }
}

fn m_scale(m: &M3<D2>, s: D2) -> M3<D2> {
    m.map(|r| r.map(|e| e * s))
}

fn diff3(a: &V3<f64>, b: &V3<f64>) -> f64 {
    max_abs3(&sub(a, b))
}

pub fn identity_residuals(f: &IdentityFields, p: &SurfacePoint) -> Result<IdentityResiduals> {
    require_second(f.v.has_second_derivatives(), "velocity")?;
    require_second(f.g.has_second_derivatives(), "scalar g")?;
    let (xd, td) = (p.xd(), p.td());
    let pd = p.frame.proj;
    let (proj, n, h) = (p.proj(), p.n(), p.h());

    let gj = f.g.jet(&xd, td);
    let vj = f.v.jet(&xd, td);
    let phij = f.phi.jet(&xd, td);
    let (mu, lam) = (f.mu.value(&xd, td), f.lambda.value(&xd, td));

    let g = gj.v.re;
    let grad_g: V3<f64> = re3(&gj.grad);
    let v = re3(&vj.v);
    let gs = matvec(&proj, &grad_g);
    let div_v = ambient_div(&vj, &pd).re;

    let mut r = IdentityResiduals {
        gradient_projected: diff3(&matvec(&proj, &gs), &gs),
        gradient_normal: dot(&n, &gs).abs(),
        gradient_chart: diff3(&p.grad(gj.v), &gs),
        divergence_chart: (p.div(&vj.v) - div_v).abs(),
        ..Default::default()
    };

    // gradient, divergence and projector identities
    let pg = m_scale(&pd, gj.v);
    let div_pg = p.div_mat(&pg);
    let expect: V3<f64> = std::array::from_fn(|i| gs[i] + g * h * n[i]);
    r.div_projector = diff3(&div_pg, &expect);
    r.projected_div_projector = diff3(&matvec(&proj, &div_pg), &gs);
    let div_pgv = p.div(&matvec(&pg, &vj.v));
    r.div_projector_vector = (div_pgv - (dot(&gs, &v) + g * h * dot(&n, &v) + g * div_v)).abs();
    r.directional_split = (dot(&v, &grad_g) - (dot(&v, &gs) + dot(&v, &n) * dot(&n, &grad_g))).abs();
    r.pressure_power = (div_pgv - dot(&div_pg, &v) - g * div_v).abs();

    // strain and stress contractions
    let sv = strain(&vj, &pd);
    let sv_re = Strain {
        grad: re33(&sv.grad),
        grad_s: re33(&sv.grad_s),
        d: re33(&sv.d),
        d_tan: re33(&sv.d_tan),
        d_proj: re33(&sv.d_proj),
        div: sv.div.re,
    };
    // tangential strain from chart-form surface derivatives
    let grad_s_chart: M3<f64> = {
        let cols: [V3<f64>; 3] = std::array::from_fn(|j| p.grad(vj.v[j]));
        std::array::from_fn(|i| std::array::from_fn(|j| cols[j][i]))
    };
    let d_tan_chart = sym(&grad_s_chart);
    r.strain_projection = max_abs33(&mat_sub(&sandwich(&proj, &sv_re.d), &sandwich(&proj, &d_tan_chart)));
    let sphi = strain(&phij.map_re(), &proj);
    r.strain_contraction = (ddot(&sv_re.d_proj, &sphi.d_proj) - ddot(&sv_re.d_proj, &sphi.d_tan)).abs();

    let dd2 = ddot(&sv_re.d_proj, &sv_re.d_proj);
    let mu_d = m_scale(&sv.d_proj, mu);
    r.viscous_product =
        (p.div(&matvec(&mu_d, &vj.v)) - (dot(&p.div_mat(&mu_d), &v) + mu.re * dd2)).abs();
    let lp = m_scale(&pd, lam * sv.div);
    r.dilatational_product =
        (p.div(&matvec(&lp, &vj.v)) - (dot(&p.div_mat(&lp), &v) + lam.re * div_v * div_v)).abs();
    let s = stress(&sv, &pd, gj.v, mu, lam);
    let power = 2.0 * mu.re * dd2 + lam.re * div_v * div_v - g * div_v;
    r.stress_power = (p.div(&matvec(&s, &vj.v)) - dot(&p.div_mat(&s), &v) - power).abs();
    r.stress_contraction = (ddot(&re33(&s), &sv_re.d_proj) - power).abs();

    // time-derivative identities, with ambient time derivatives
    let vn = dot(&v, &n);
    let dn_g = gj.dt.re + vn * dot(&n, &grad_g);
    let dt_g = gj.dt.re + dot(&v, &grad_g);
    let gv: V3<D2> = std::array::from_fn(|i| gj.v * vj.v[i]);
    r.normal_time_derivative = (dn_g + p.div(&gv) - (dt_g + div_v * g)).abs();
    let vre = vj.map_re();
    let dt_v: V3<f64> = std::array::from_fn(|j| vre.dt[j] + (0..3).map(|i| v[i] * vre.d[i][j]).sum::<f64>());
    let gvv: M3<D2> = std::array::from_fn(|i| std::array::from_fn(|j| gj.v * vj.v[i] * vj.v[j]));
    let div_gvv = p.div_mat(&gvv);
    let lhs: V3<f64> = std::array::from_fn(|j| {
        // D_t^N (g v_j) with ∇(g v_j) = v_j ∇g + g ∇v_j
        let d_gvj: V3<f64> = std::array::from_fn(|k| v[j] * grad_g[k] + g * vre.d[k][j]);
        gj.dt.re * v[j] + g * vre.dt[j] + vn * dot(&n, &d_gvj) + div_gvv[j]
    });
    let rhs: V3<f64> = std::array::from_fn(|j| (dt_g + div_v * g) * v[j] + g * dt_v[j]);
    r.momentum_time_derivative = diff3(&lhs, &rhs);
    Ok(r)
}

/// Absolute residuals of the two integration-by-parts identities on a
/// closed surface.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct PartsResiduals {
    /// `max_m |∫ (∂_m f) g + f ∂_m g + H n_m f g|`
    pub product: f64,
    /// `|∫ f div_Γ φ + (grad_Γ f + f H n)·φ|`
    pub divergence: f64,
}

pub fn integration_by_parts(
    atlas: &ChartAtlas,
    rule: &QuadratureRule,
    f: &ScalarField,
    g: &ScalarField,
    phi: &VectorField,
    t: f64,
) -> Result<PartsResiduals> {
    if !atlas.is_closed() {
        return Err(Error::Invalid("integration by parts needs a closed surface".into()));
    }
    let mut prod = [0.0; 3];
    let mut div = 0.0;
    for s in samples(atlas, rule, t)? {
        let m = &s.metric;
        let (x, n, h) = (m.x, m.normal, m.mean_curvature);
        let fj = f.jet(&x, t);
        let gj = g.jet(&x, t);
        let gf = matvec(&m.projection, &fj.grad);
        let gg = matvec(&m.projection, &gj.grad);
        for k in 0..3 {
            prod[k] += s.weight * (gf[k] * gj.v + fj.v * gg[k] + h * n[k] * fj.v * gj.v);
        }
        let pj = phi.jet(&x, t);
        let dphi = ambient_div(&pj, &m.projection);
        let w: V3<f64> = std::array::from_fn(|k| gf[k] + fj.v * h * n[k]);
        div += s.weight * (fj.v * dphi + dot(&w, &pj.v));
    }
    Ok(PartsResiduals { product: max_abs3(&prod), divergence: div.abs() })
}

/// `∫ div_Γ S_Γ(v, σ, μ, λ) dH²`, with the divergence taken along the chart.
pub fn stress_divergence_integral(
    atlas: &ChartAtlas,
    rule: &QuadratureRule,
    v: &VectorField,
    sigma: &ScalarField,
    mu: &ScalarField,
    lambda: &ScalarField,
    t: f64,
) -> Result<V3<f64>> {
    require_second(v.has_second_derivatives(), "velocity")?;
    let mut acc = [0.0; 3];
    for s in samples(atlas, rule, t)? {
        let p = SurfacePoint::new(&atlas.charts[s.node.chart], s.node.coords, t)?;
        let (xd, td) = (p.xd(), p.td());
        let st = strain(&v.jet(&xd, td), &p.frame.proj);
        let sig = stress(&st, &p.frame.proj, sigma.value(&xd, td), mu.value(&xd, td), lambda.value(&xd, td));
        let d = p.div_mat(&sig);
        for i in 0..3 {
            acc[i] += s.weight * d[i];
        }
    }
    Ok(acc)
}

impl VecJet<D2> {
    pub fn map_re(&self) -> VecJet<f64> {
        VecJet { v: re3(&self.v), d: re33(&self.d), dt: re3(&self.dt) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::MatrixField;
    use crate::geometry::ChartAtlas;
    use std::f64::consts::PI;

    fn sphere_point(c: [f64; 2]) -> SurfacePoint {
        let atlas = ChartAtlas::sphere(1.0);
        SurfacePoint::new(&atlas.charts[0], c, 0.0).unwrap()
    }

    #[test]
    fn gradient_of_height_on_unit_sphere() {
        let f = ScalarField::parse("x3").unwrap();
        let p = sphere_point([PI / 2.0, 0.0]);
        let g = surface_gradient(&f, &p);
        assert!(diff3(&g, &[0.0, 0.0, 1.0]) < 1e-15);
        assert!(diff3(&surface_gradient_chart(&f, &p), &g) < 1e-14);
        assert_eq!(surface_gradient(&ScalarField::constant(2.0), &p), [0.0; 3]);
        // north pole, seen through the rotated chart
        let atlas = ChartAtlas::sphere(1.0);
        let q = SurfacePoint::new(&atlas.charts[1], [PI / 2.0, PI / 2.0], 0.0).unwrap();
        assert!(diff3(&q.x(), &[0.0, 0.0, 1.0]) < 1e-15);
        assert!(max_abs3(&surface_gradient(&f, &q)) < 1e-15);
    }

    #[test]
    fn divergences_on_unit_sphere() {
        let p = sphere_point([1.0, 2.0]);
        let x = VectorField::position();
        assert!((surface_divergence_vec(&x, &p) - 2.0).abs() < 1e-14);
        assert!((surface_divergence_vec_chart(&x, &p) - 2.0).abs() < 1e-14);
        assert!(surface_divergence_vec(&VectorField::constant([1.0, 2.0, 3.0]), &p).abs() < 1e-15);
        // n extended as x / |x|
        let nf = VectorField::parse(["x1/sqrt(x1^2+x2^2+x3^2)", "x2/sqrt(x1^2+x2^2+x3^2)", "x3/sqrt(x1^2+x2^2+x3^2)"])
            .unwrap();
        assert!((surface_divergence_vec(&nf, &p) - 2.0).abs() < 1e-14);
        assert!((surface_divergence_vec(&nf, &p) + p.h()).abs() < 1e-13);
    }

    #[test]
    fn matrix_divergence_of_negative_projector() {
        let p = sphere_point([0.7, 5.0]);
        let s = m_scale(&p.frame.proj, D2::cst(-1.0));
        let d = p.div_mat(&s);
        let n = p.n();
        assert!(diff3(&d, &[2.0 * n[0], 2.0 * n[1], 2.0 * n[2]]) < 1e-13);
        let c = MatrixField::new(std::array::from_fn(|i| std::array::from_fn(|j| crate::expr::Expr::Num((i + j) as f64))));
        assert!(max_abs3(&surface_divergence_mat(&c, &p)) < 1e-15);
    }

    #[test]
    fn strain_examples() {
        let p = sphere_point([PI / 2.0, 0.3]);
        let zero = ScalarField::constant(0.0);
        let one = ScalarField::constant(1.0);
        let t = strain_and_stress(&VectorField::position(), &zero, &one, &zero, &p);
        assert!(max_abs33(&mat_sub(&t.projected_strain, &p.proj())) < 1e-14);
        assert!((t.dissipation - 4.0).abs() < 1e-13);
        assert!((t.viscous_energy - 2.0).abs() < 1e-13);
        let r = strain_and_stress(&VectorField::rotation([0.3, -1.0, 2.0]), &zero, &one, &one, &p);
        assert!(max_abs33(&r.strain) < 1e-15 && r.dissipation.abs() < 1e-15);
        // north pole, v = 0, σ = 1
        let atlas = ChartAtlas::sphere(1.0);
        let q = SurfacePoint::new(&atlas.charts[1], [PI / 2.0, PI / 2.0], 0.0).unwrap();
        let s = strain_and_stress(&VectorField::zero(), &one, &zero, &zero, &q);
        let want = [[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 0.0]];
        assert!(max_abs33(&mat_sub(&s.stress, &want)) < 1e-15);
    }

    #[test]
    fn identities_vanish_for_zero_fields() {
        let f = IdentityFields {
            v: VectorField::zero(),
            phi: VectorField::zero(),
            g: ScalarField::constant(0.0),
            mu: ScalarField::constant(0.0),
            lambda: ScalarField::constant(0.0),
        };
        let r = identity_residuals(&f, &sphere_point([1.0, 1.0])).unwrap();
        assert_eq!(r.max(), 0.0);
    }

    #[test]
    fn strain_projection_for_polynomial_field() {
        let f = IdentityFields {
            v: VectorField::parse(["x2^2", "x3", "x1*x2"]).unwrap(),
            phi: VectorField::parse(["x3", "x1^2", "sin(x2)"]).unwrap(),
            g: ScalarField::parse("x1*x3 + t").unwrap(),
            mu: ScalarField::parse("1 + x2^2").unwrap(),
            lambda: ScalarField::constant(0.5),
        };
        let r = identity_residuals(&f, &sphere_point([0.8, 2.5])).unwrap();
        assert!(r.strain_projection < 1e-10);
        assert!(r.max() < 1e-12, "{r:?}");
    }

    #[test]
    fn integration_by_parts_on_sphere() {
        let atlas = ChartAtlas::sphere(1.0);
        let rule = crate::geometry::QuadratureRule::gauss(&atlas, 32);
        let f = ScalarField::parse("x1*x3 + sin(x2)").unwrap();
        let g = ScalarField::parse("exp(0.3*x1) - x2^2").unwrap();
        let phi = VectorField::parse(["x2", "x3^2", "cos(x1)"]).unwrap();
        let r = integration_by_parts(&atlas, &rule, &f, &g, &phi, 0.0).unwrap();
        assert!(r.product < 1e-6 && r.divergence < 1e-6, "{r:?}");
        let zero = ScalarField::constant(0.0);
        let fine = crate::geometry::QuadratureRule::gauss(&atlas, 48);
        let d = stress_divergence_integral(&atlas, &fine, &phi, &g, &ScalarField::constant(1.0), &zero, 0.0).unwrap();
        assert!(max_abs3(&d) < 1e-8, "{d:?}");
    }

    #[test]
    fn missing_second_derivatives_are_reported() {
        let f = IdentityFields {
            v: VectorField::position().with_derivatives(crate::field::Derivatives::FirstOrder),
            phi: VectorField::zero(),
            g: ScalarField::constant(0.0),
            mu: ScalarField::constant(0.0),
            lambda: ScalarField::constant(0.0),
        };
        assert!(matches!(identity_residuals(&f, &sphere_point([1.0, 1.0])), Err(Error::MissingDerivative(_))));
    }
}
