//! Pointwise residuals of the surface fluid systems and thermodynamic
//! quantities.
//!
//! All fields are ambient closed-form expressions restricted to the surface.
//! Quantities that are differentiated along the surface (stress, fluxes,
//! conservative fluxes) are evaluated with chart-derivative dual numbers.

use serde::Serialize;

use crate::ad::{Real, D2};
use crate::error::{Error, Result};
use crate::field::{Jet, ScalarField, VecJet, VectorField};
use crate::laws::PressureLaw;
use crate::linalg::*;
use crate::surface_ops::{dissipation, strain, stress, Strain, SurfacePoint};

/// Primary and thermodynamic fields.
#[derive(Clone, Debug)]
pub struct FluidFields {
    pub rho: ScalarField,
    pub v: VectorField,
    /// Tangential part `u` of the velocity, when known.
    pub u: Option<VectorField>,
    pub sigma: ScalarField,
    pub e: ScalarField,
    pub theta: ScalarField,
    pub c: ScalarField,
    pub s: ScalarField,
}

impl Default for FluidFields {
    fn default() -> Self {
        FluidFields {
            rho: ScalarField::constant(1.0),
            v: VectorField::zero(),
            u: None,
            sigma: ScalarField::constant(0.0),
            e: ScalarField::constant(0.0),
            theta: ScalarField::constant(1.0),
            c: ScalarField::constant(0.0),
            s: ScalarField::constant(0.0),
        }
    }
}

/// Material coefficients, force and sources.
#[derive(Clone, Debug)]
pub struct Coefficients {
    pub mu: ScalarField,
    pub lambda: ScalarField,
    pub kappa: ScalarField,
    pub nu: ScalarField,
    pub c_theta: ScalarField,
    pub force: VectorField,
    pub q_theta: ScalarField,
    pub q_c: ScalarField,
    pub f1: ScalarField,
    pub f2: ScalarField,
}

impl Default for Coefficients {
    fn default() -> Self {
        let zero = ScalarField::constant(0.0);
        Coefficients {
            mu: zero.clone(),
            lambda: zero.clone(),
            kappa: zero.clone(),
            nu: zero.clone(),
            c_theta: ScalarField::constant(1.0),
            force: VectorField::zero(),
            q_theta: zero.clone(),
            q_c: zero.clone(),
            f1: zero.clone(),
            f2: zero,
        }
    }
}

/// Residual of each line of the compressible system (signed).
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct SystemResidual {
    pub mass: f64,
    pub momentum: V3<f64>,
    pub energy: f64,
    pub concentration: f64,
}

impl SystemResidual {
    /// `(|r_mass|, |r_mom|, |r_energy|, |r_conc|)` with the momentum in
    /// max-abs norm.
    pub fn magnitudes(&self) -> [f64; 4] {
        [self.mass.abs(), max_abs3(&self.momentum), self.energy.abs(), self.concentration.abs()]
    }

    pub fn max(&self) -> f64 {
        self.magnitudes().into_iter().fold(0.0, f64::max)
    }
}

/// Everything the residuals need at one point.
struct Local {
    rho: Jet<D2>,
    v: VecJet<D2>,
    sigma: Jet<D2>,
    e: Jet<D2>,
    theta: Jet<D2>,
    c: Jet<D2>,
    mu: D2,
    lambda: D2,
    kappa: D2,
    force: V3<f64>,
    q_theta: f64,
    q_c: f64,
    strain: Strain<D2>,
    stress: M3<D2>,
    /// `κ grad_Γ θ`
    heat_flux: V3<D2>,
    /// `ν grad_Γ C`
    conc_flux: V3<D2>,
}

fn re_jet(j: &Jet<D2>) -> Jet<f64> {
    Jet { v: j.v.re, grad: re3(&j.grad), dt: j.dt.re }
}

impl Local {
    fn new(f: &FluidFields, k: &Coefficients, p: &SurfacePoint) -> Local {
        let (x, t) = (p.xd(), p.td());
        let pd = &p.frame.proj;
        let v = f.v.jet(&x, t);
        let sigma = f.sigma.jet(&x, t);
        let theta = f.theta.jet(&x, t);
        let c = f.c.jet(&x, t);
        let (mu, lambda) = (k.mu.value(&x, t), k.lambda.value(&x, t));
        let (kappa, nu) = (k.kappa.value(&x, t), k.nu.value(&x, t));
        let st = strain(&v, pd);
        let stress = stress(&st, pd, sigma.v, mu, lambda);
        let (xr, tr) = (p.x(), p.t);
        Local {
            rho: f.rho.jet(&x, t),
            e: f.e.jet(&x, t),
            heat_flux: scale(&matvec(pd, &theta.grad), kappa),
            conc_flux: scale(&matvec(pd, &c.grad), nu),
            v,
            sigma,
            theta,
            c,
            mu,
            lambda,
            kappa,
            force: k.force.value(&xr, tr),
            q_theta: k.q_theta.value(&xr, tr),
            q_c: k.q_c.value(&xr, tr),
            strain: st,
            stress,
        }
    }

    fn vel(&self) -> V3<f64> {
        re3(&self.v.v)
    }

    fn div_v(&self) -> f64 {
        self.strain.div.re
    }

    /// `D_t f = ∂_t f + v·∇f`.
    fn material(&self, j: &Jet<D2>) -> f64 {
        let j = re_jet(j);
        j.dt + dot(&self.vel(), &j.grad)
    }

    /// `D_t v`.
    fn accel(&self) -> V3<f64> {
        let v = self.vel();
        std::array::from_fn(|k| self.v.dt[k].re + (0..3).map(|i| v[i] * self.v.d[i][k].re).sum::<f64>())
    }

    fn dissipation(&self) -> f64 {
        dissipation(&self.strain, self.mu, self.lambda).re
    }
}

fn full(l: &Local, p: &SurfacePoint) -> SystemResidual {
    let rho = l.rho.v.re;
    let div_v = l.div_v();
    let div_s = p.div_mat(&l.stress);
    let a = l.accel();
    SystemResidual {
        mass: l.material(&l.rho) + div_v * rho,
        momentum: std::array::from_fn(|i| rho * a[i] - div_s[i] - rho * l.force[i]),
        energy: rho * l.material(&l.e) + div_v * l.sigma.v.re
            - p.div(&l.heat_flux)
            - rho * l.q_theta
            - l.dissipation(),
        concentration: l.material(&l.c) + div_v * l.c.v.re - p.div(&l.conc_flux) - l.q_c,
    }
}

/// Residual of the non-conservative compressible system.
pub fn residual_full(f: &FluidFields, k: &Coefficients, p: &SurfacePoint) -> Result<SystemResidual> {
    require_second(f, k)?;
    Ok(full(&Local::new(f, k, p), p))
}

fn require_second(f: &FluidFields, k: &Coefficients) -> Result<()> {
    let missing = [
        (!f.v.has_second_derivatives(), "velocity"),
        (!f.theta.has_second_derivatives(), "temperature"),
        (!f.c.has_second_derivatives(), "concentration"),
        (!k.mu.has_second_derivatives() || !k.lambda.has_second_derivatives(), "viscosity"),
    ];
    match missing.iter().find(|m| m.0) {
        Some((_, what)) => Err(Error::MissingDerivative(format!("second partials of the {what}"))),
        None => Ok(()),
    }
}

fn conservative(l: &Local, p: &SurfacePoint) -> SystemResidual {
    let n = p.n();
    let v = l.vel();
    let vn = dot(&v, &n);
    let rho = re_jet(&l.rho);
    let e = re_jet(&l.e);
    let c = re_jet(&l.c);
    let vd = &l.v;
    // D_t^N f = ∂_t f + (v·n)(n·∇f)
    let normal = |dt: f64, grad: &V3<f64>| dt + vn * dot(&n, grad);

    let rv: V3<D2> = std::array::from_fn(|i| l.rho.v * vd.v[i]);
    let mass = normal(rho.dt, &rho.grad) + p.div(&rv);

    let flux: M3<D2> = std::array::from_fn(|i| std::array::from_fn(|j| rv[i] * vd.v[j] - l.stress[i][j]));
    let div_flux = p.div_mat(&flux);
    let momentum = std::array::from_fn(|i| {
        let dt = rho.dt * v[i] + rho.v * vd.dt[i].re;
        let grad: V3<f64> = std::array::from_fn(|k| v[i] * rho.grad[k] + rho.v * vd.d[k][i].re);
        normal(dt, &grad) + div_flux[i] - rho.v * l.force[i]
    });

    let vv = dot(&v, &v);
    let ea: D2 = l.rho.v * (dot(&vd.v, &vd.v) * 0.5 + l.e.v);
    let sv = matvec(&l.stress, &vd.v);
    let en_flux: V3<D2> = std::array::from_fn(|i| ea * vd.v[i] - l.heat_flux[i] - sv[i]);
    let ea_dt = rho.dt * (0.5 * vv + e.v) + rho.v * ((0..3).map(|j| v[j] * vd.dt[j].re).sum::<f64>() + e.dt);
    let ea_grad: V3<f64> = std::array::from_fn(|k| {
        (0.5 * vv + e.v) * rho.grad[k] + rho.v * ((0..3).map(|j| v[j] * vd.d[k][j].re).sum::<f64>() + e.grad[k])
    });
    let energy = normal(ea_dt, &ea_grad) + p.div(&en_flux) - rho.v * l.q_theta - rho.v * dot(&l.force, &v);

    let c_flux: V3<D2> = std::array::from_fn(|i| l.c.v * vd.v[i] - l.conc_flux[i]);
    let concentration = normal(c.dt, &c.grad) + p.div(&c_flux) - l.q_c;
    SystemResidual { mass, momentum, energy, concentration }
}

/// Residual of the conservative form of the compressible system.
pub fn residual_conservative(f: &FluidFields, k: &Coefficients, p: &SurfacePoint) -> Result<SystemResidual> {
    require_second(f, k)?;
    Ok(conservative(&Local::new(f, k, p), p))
}

/// Deviation of the conservative residual from the combination of
/// non-conservative residuals it must equal for arbitrary fields:
/// `mass`, `r_mass v + r_mom`, `(½|v|² + e) r_mass + r_mom·v + r_energy`,
/// `r_conc`. Also reports the stress-power identity
/// `ẽ_D − (div_Γ v)σ = div_Γ(S v) − div_Γ S · v`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Equivalence {
    pub mass: f64,
    pub momentum: f64,
    pub energy: f64,
    pub concentration: f64,
    pub stress_power: f64,
}

impl Equivalence {
    pub fn max(&self) -> f64 {
        [self.mass, self.momentum, self.energy, self.concentration, self.stress_power].into_iter().fold(0.0, f64::max)
    }
}

pub fn conservative_equivalence(f: &FluidFields, k: &Coefficients, p: &SurfacePoint) -> Result<Equivalence> {
    require_second(f, k)?;
    let l = Local::new(f, k, p);
    let (a, b) = (full(&l, p), conservative(&l, p));
    let v = l.vel();
    let mom: V3<f64> = std::array::from_fn(|i| b.momentum[i] - (a.mass * v[i] + a.momentum[i]));
    let en = b.energy - ((0.5 * dot(&v, &v) + l.e.v.re) * a.mass + dot(&a.momentum, &v) + a.energy);
    let sv = matvec(&l.stress, &l.v.v);
    let power = p.div(&sv) - dot(&p.div_mat(&l.stress), &v);
    Ok(Equivalence {
        mass: (b.mass - a.mass).abs(),
        momentum: max_abs3(&mom),
        energy: en.abs(),
        concentration: (b.concentration - a.concentration).abs(),
        stress_power: (l.dissipation() - l.div_v() * l.sigma.v.re - power).abs(),
    })
}

/// Residuals of the tangential system: the projected momentum line and the
/// tangency defect `|v·n|` in addition to the scalar lines.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TangentialResidual {
    pub lines: SystemResidual,
    pub normal_velocity: f64,
}

pub fn residual_tangential(f: &FluidFields, k: &Coefficients, p: &SurfacePoint) -> Result<TangentialResidual> {
    require_second(f, k)?;
    let l = Local::new(f, k, p);
    let mut r = full(&l, p);
    r.momentum = matvec(&p.proj(), &r.momentum);
    Ok(TangentialResidual { lines: r, normal_velocity: dot(&l.vel(), &p.n()).abs() })
}

/// Residual of `ρ D_t v + grad_Γ σ + σ H n = P div_Γ S(u, 0, μ, λ) + ρF`
/// together with continuity.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MomentumResidual {
    pub mass: f64,
    pub momentum: V3<f64>,
}

impl MomentumResidual {
    pub fn max(&self) -> f64 {
        self.mass.abs().max(max_abs3(&self.momentum))
    }
}

pub fn residual_noncanonical(f: &FluidFields, k: &Coefficients, p: &SurfacePoint) -> Result<MomentumResidual> {
    require_second(f, k)?;
    let u = f.u.as_ref().ok_or_else(|| Error::Invalid("the tangential velocity u is required".into()))?;
    let l = Local::new(f, k, p);
    let (x, t) = (p.xd(), p.td());
    let su = strain(&u.jet(&x, t), &p.frame.proj);
    let s = stress(&su, &p.frame.proj, D2::cst(0.0), l.mu, l.lambda);
    let pdiv = matvec(&p.proj(), &p.div_mat(&s));
    let rho = l.rho.v.re;
    let sig = re_jet(&l.sigma);
    let gs = matvec(&p.proj(), &sig.grad);
    let (a, n, h) = (l.accel(), p.n(), p.h());
    Ok(MomentumResidual {
        mass: l.material(&l.rho) + l.div_v() * rho,
        momentum: std::array::from_fn(|i| rho * a[i] + gs[i] + sig.v * h * n[i] - pdiv[i] - rho * l.force[i]),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BarotropicVariant {
    /// `ρ D_t v + grad_Γ 𝔭 + 𝔭 H n = 0`
    Full,
    /// `P ρ D_t v + grad_Γ 𝔭 = 0`
    Tangential,
}

pub fn residual_barotropic(
    f: &FluidFields,
    law: &PressureLaw,
    p: &SurfacePoint,
    variant: BarotropicVariant,
) -> Result<MomentumResidual> {
    let (x, t) = (p.x(), p.t);
    let rho = f.rho.jet(&x, t);
    if !(rho.v > 0.0) {
        return Err(Error::NonpositiveDensity { value: rho.v });
    }
    let v = f.v.jet(&x, t);
    let proj = p.proj();
    let div_v = crate::surface_ops::ambient_div(&v, &proj);
    let a: V3<f64> = std::array::from_fn(|k| v.dt[k] + (0..3).map(|i| v.v[i] * v.d[i][k]).sum::<f64>());
    let pe = law.effective(rho.v);
    let grad_pe = scale(&matvec(&proj, &rho.grad), law.effective_slope(rho.v));
    let (n, h) = (p.n(), p.h());
    let momentum = match variant {
        BarotropicVariant::Full => std::array::from_fn(|i| rho.v * a[i] + grad_pe[i] + pe * h * n[i]),
        BarotropicVariant::Tangential => {
            let pa = matvec(&proj, &a);
            std::array::from_fn(|i| rho.v * pa[i] + grad_pe[i])
        }
    };
    Ok(MomentumResidual { mass: rho.dt + dot(&v.v, &rho.grad) + div_v * rho.v, momentum })
}

/// Thermodynamic quantities at a point.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Thermo {
    /// `h = e + σ/ρ`
    pub enthalpy: f64,
    /// `e_F = e − θ s`
    pub free_energy: f64,
    /// `e_A = ½ρ|v|² + ρe`
    pub total_energy: f64,
    /// `ẽ_D/θ + κ|grad_Γ θ|²/θ²`
    pub entropy_production: f64,
    /// `ρ D_t h − (div_Γ q_θ + ρQ_θ + ẽ_D + D_t σ)`
    pub enthalpy_residual: f64,
    /// `ρ D_t s − (div_Γ q_θ + ρQ_θ + ẽ_D)/θ`
    pub entropy_residual: f64,
    /// `ρ D_t e_F + ρ s D_t θ − S:D_Γ + ẽ_D`
    pub free_energy_residual: f64,
    /// `D_t e − θ D_t s + σ D_t(1/ρ)`
    pub gibbs_residual: f64,
}

pub fn thermo_quantities(f: &FluidFields, k: &Coefficients, p: &SurfacePoint) -> Result<Thermo> {
    require_second(f, k)?;
    let l = Local::new(f, k, p);
    let (x, t) = (p.xd(), p.td());
    let rho = l.rho.v.re;
    let theta = l.theta.v.re;
    if !(rho > 0.0) {
        return Err(Error::NonpositiveDensity { value: rho });
    }
    if !(theta > 0.0) {
        return Err(Error::NonpositiveTemperature { value: theta });
    }
    let s = f.s.jet(&x, t);
    let (e, sig, sv) = (l.e.v.re, l.sigma.v.re, s.v.re);
    let (dte, dts, dtt, dtr, dtsig) =
        (l.material(&l.e), l.material(&s), l.material(&l.theta), l.material(&l.rho), l.material(&l.sigma));
    let ed = l.dissipation();
    let heat = p.div(&l.heat_flux) + rho * l.q_theta;
    let grad_theta = matvec(&p.proj(), &re3(&l.theta.grad));
    let kappa = l.kappa.re;
    let dth = dte + dtsig / rho - sig * dtr / (rho * rho);
    let dtef = dte - sv * dtt - theta * dts;
    let sd = ddot(&re33(&l.stress), &re33(&l.strain.d_proj));
    let v = l.vel();
    Ok(Thermo {
        enthalpy: e + sig / rho,
        free_energy: e - theta * sv,
        total_energy: 0.5 * rho * dot(&v, &v) + rho * e,
        entropy_production: ed / theta + kappa * dot(&grad_theta, &grad_theta) / (theta * theta),
        enthalpy_residual: rho * dth - (heat + ed + dtsig),
        entropy_residual: rho * dts - (heat + ed) / theta,
        free_energy_residual: rho * dtef + rho * sv * dtt - sd + ed,
        gibbs_residual: dte - theta * dts - sig * dtr / (rho * rho),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ChartAtlas;

    fn point(c: [f64; 2]) -> SurfacePoint {
        SurfacePoint::new(&ChartAtlas::sphere(1.0).charts[0], c, 0.0).unwrap()
    }

    #[test]
    fn static_state_has_zero_residuals() {
        let f = FluidFields {
            rho: ScalarField::constant(2.0),
            sigma: ScalarField::constant(3.0),
            theta: ScalarField::constant(1.5),
            c: ScalarField::constant(0.4),
            ..Default::default()
        };
        let k = Coefficients { mu: ScalarField::constant(1.0), kappa: ScalarField::constant(1.0), ..Default::default() };
        let p = point([1.0, 1.0]);
        // constant pressure on a curved surface pushes along the normal
        let r = residual_full(&f, &k, &p).unwrap();
        assert!(r.mass == 0.0 && r.energy == 0.0 && r.concentration == 0.0);
        let n = p.n();
        assert!(max_abs3(&sub(&r.momentum, &scale(&n, -6.0))) < 1e-13);
        let t = residual_tangential(&f, &k, &p).unwrap();
        assert!(t.lines.max() < 1e-13);
        assert!(residual_conservative(&f, &k, &p).unwrap().mass == 0.0);
    }

    #[test]
    fn linear_law_has_no_effective_pressure() {
        let f = FluidFields { rho: ScalarField::parse("2 + x1*x3").unwrap(), ..Default::default() };
        let p = point([0.9, 4.0]);
        for variant in [BarotropicVariant::Full, BarotropicVariant::Tangential] {
            let r = residual_barotropic(&f, &PressureLaw::Linear { k: 3.0 }, &p, variant).unwrap();
            assert!(r.max() < 1e-15);
        }
        let bad = FluidFields { rho: ScalarField::constant(-1.0), ..Default::default() };
        assert!(matches!(
            residual_barotropic(&bad, &PressureLaw::Quadratic, &p, BarotropicVariant::Full),
            Err(Error::NonpositiveDensity { .. })
        ));
    }

    #[test]
    fn dilation_entropy_production() {
        let f = FluidFields { v: VectorField::position(), ..Default::default() };
        let k = Coefficients { mu: ScalarField::constant(1.0), ..Default::default() };
        let th = thermo_quantities(&f, &k, &point([0.6, 0.2])).unwrap();
        assert!((th.entropy_production - 4.0).abs() < 1e-13);
        let cold = FluidFields { theta: ScalarField::constant(0.0), ..Default::default() };
        assert!(matches!(thermo_quantities(&cold, &k, &point([0.6, 0.2])), Err(Error::NonpositiveTemperature { .. })));
    }
}
