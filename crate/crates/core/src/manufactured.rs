//! Closed-form states that satisfy the fluid systems exactly, with the
//! forces and sources they require.
//!
//! On the dilating sphere `|x| = R = 1 + t` the reference point is
//! `X = x / R`, which is constant along trajectories of `v = x / R`.

use crate::evolving::MotionLaw;
use crate::expr::Expr;
use crate::field::{ScalarField, VectorField};
use crate::fluid::{Coefficients, FluidFields};

/// A manufactured state together with the surface motion it lives on.
#[derive(Clone, Debug)]
pub struct Manufactured {
    pub fields: FluidFields,
    pub coeffs: Coefficients,
    pub motion: MotionLaw,
    /// Radius of the sphere at time `t` as a function of `t`.
    pub radius: fn(f64) -> f64,
}

fn radius_expr() -> Expr {
    1.0 + Expr::t()
}

/// Reference coordinates `X = x / (1 + t)`.
pub fn reference_coords() -> [Expr; 3] {
    std::array::from_fn(|i| Expr::x(i) / radius_expr())
}

/// Rewrites an expression in `(x, t)` as the same expression in `(X, t)`.
pub fn in_reference(e: &Expr) -> Expr {
    e.substitute(&reference_coords(), &Expr::t())
}

fn dilating_radius(t: f64) -> f64 {
    1.0 + t
}

fn unit_radius(_: f64) -> f64 {
    1.0
}

fn s(e: Expr) -> ScalarField {
    ScalarField::new(e)
}

/// Dilating unit sphere, `ρ = ρ₀(X)/R²`, stress-free pressure
/// `σ = 2(μ+λ)/R`, `e = e₀(X)`, `θ = 1 + X₃`, `C = (1 + X₃)/R²`.
/// `ρ₀` and `e₀` are expressions in `(x1, x2, x3)` read as `X`.
pub fn dilating_sphere(rho0: &Expr, e0: &Expr, mu: f64, lambda: f64, kappa: f64, nu: f64) -> Manufactured {
    let r = radius_expr;
    let x3r = || Expr::x(2) / r();
    let rho = in_reference(rho0) / r().powi(2);
    let fields = FluidFields {
        rho: s(rho.clone()),
        v: MotionLaw::dilation().velocity,
        u: Some(VectorField::zero()),
        sigma: s(2.0 * (mu + lambda) / r()),
        e: s(in_reference(e0)),
        theta: s(1.0 + x3r()),
        c: s((1.0 + x3r()) / r().powi(2)),
        s: ScalarField::constant(0.0),
    };
    let coeffs = Coefficients {
        mu: ScalarField::constant(mu),
        lambda: ScalarField::constant(lambda),
        kappa: ScalarField::constant(kappa),
        nu: ScalarField::constant(nu),
        q_theta: s(2.0 * kappa * x3r() / (r().powi(2) * rho)),
        q_c: s(2.0 * nu * x3r() / r().powi(4)),
        ..Default::default()
    };
    Manufactured { fields, coeffs, motion: MotionLaw::dilation(), radius: dilating_radius }
}

/// Rigid rotation `v = w e₃ × x` of the static unit sphere with
/// `ρ = 2 + x₃²`, `σ = x₃`, `e = 1 + x₃²`, `θ = 1 + x₃/2`, `C = 1 + x₃/2`.
/// The force balances the full momentum line on the unit sphere.
pub fn rotating_sphere(w: f64, mu: f64, lambda: f64, kappa: f64, nu: f64) -> Manufactured {
    let x = Expr::x;
    let rho = || 2.0 + x(2).powi(2);
    let v = VectorField::rotation([0.0, 0.0, w]);
    // centripetal acceleration plus (grad_Γ σ + σ H n)/ρ with n = x, H = −2
    let w2 = w * w;
    let force = VectorField::new([
        -w2 * x(0) - 3.0 * x(2) * x(0) / rho(),
        -w2 * x(1) - 3.0 * x(2) * x(1) / rho(),
        (1.0 - 3.0 * x(2) * x(2)) / rho(),
    ]);
    let fields = FluidFields {
        rho: s(rho()),
        u: Some(v.clone()),
        v: v.clone(),
        sigma: s(x(2)),
        e: s(1.0 + x(2).powi(2)),
        theta: s(1.0 + 0.5 * x(2)),
        c: s(1.0 + 0.5 * x(2)),
        s: ScalarField::constant(0.0),
    };
    let coeffs = Coefficients {
        mu: ScalarField::constant(mu),
        lambda: ScalarField::constant(lambda),
        kappa: ScalarField::constant(kappa),
        nu: ScalarField::constant(nu),
        force,
        q_theta: s(kappa * x(2) / rho()),
        q_c: s(nu * x(2)),
        ..Default::default()
    };
    Manufactured { fields, coeffs, motion: MotionLaw::prescribed(v), radius: unit_radius }
}

/// Dilating unit sphere with purely normal velocity (`u = 0`), spatially
/// uniform pressure `σ = σ₀/R` and the force `F = σ H n / ρ`.
pub fn dilating_normal_flow(rho0: &Expr, sigma0: f64) -> Manufactured {
    let r = radius_expr;
    let rho = in_reference(rho0) / r().powi(2);
    let force = VectorField::new(std::array::from_fn(|i| {
        -2.0 * sigma0 * Expr::x(i) / (r().powi(3) * rho.clone())
    }));
    let fields = FluidFields {
        rho: s(rho.clone()),
        v: MotionLaw::dilation().velocity,
        u: Some(VectorField::zero()),
        sigma: s(sigma0 / r()),
        ..Default::default()
    };
    let coeffs = Coefficients { force, ..Default::default() };
    Manufactured { fields, coeffs, motion: MotionLaw::dilation(), radius: dilating_radius }
}

/// Steady rotation `v = w e₃ × x` on the static unit sphere balanced by the
/// effective pressure of `p(ρ) = ρ²`: `ρ = c − w² x₃²/4`, `c > w²/4`.
pub fn barotropic_rotation(w: f64, c: f64) -> FluidFields {
    FluidFields {
        rho: s(c - 0.25 * w * w * Expr::x(2).powi(2)),
        v: VectorField::rotation([0.0, 0.0, w]),
        ..Default::default()
    }
}

/// Thermodynamically consistent state on the dilating sphere from the
/// internal energy `E(s, τ) = eˢ/τ` per unit mass, `τ = 1/ρ`:
/// `e = ρeˢ`, `θ = ρeˢ`, `σ = ρ²eˢ`. The entropy is chosen so that
/// `e = θ = 2 + X₃`, and the heat source closes the energy line.
pub fn dilating_thermo(rho0: &Expr, mu: f64, lambda: f64, kappa: f64) -> Manufactured {
    let r = radius_expr;
    let x3r = || Expr::x(2) / r();
    let rho = || in_reference(rho0) / r().powi(2);
    let e = || 2.0 + x3r();
    let q = (2.0 * rho() * e() / r() + 2.0 * kappa * x3r() / r().powi(2) - 4.0 * (mu + lambda) / r().powi(2)) / rho();
    let fields = FluidFields {
        rho: s(rho()),
        v: MotionLaw::dilation().velocity,
        u: Some(VectorField::zero()),
        sigma: s(rho() * e()),
        e: s(e()),
        theta: s(e()),
        c: ScalarField::constant(0.0),
        s: s((e() / rho()).ln()),
    };
    let coeffs = Coefficients {
        mu: ScalarField::constant(mu),
        lambda: ScalarField::constant(lambda),
        kappa: ScalarField::constant(kappa),
        q_theta: s(q),
        ..Default::default()
    };
    Manufactured { fields, coeffs, motion: MotionLaw::dilation(), radius: dilating_radius }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluid::*;
    use crate::geometry::{ChartAtlas, QuadratureRule};
    use crate::laws::PressureLaw;
    use crate::surface_ops::SurfacePoint;

    fn points(radius: f64, t: f64) -> Vec<SurfacePoint> {
        let atlas = ChartAtlas::sphere(radius);
        QuadratureRule::gauss(&atlas, 8)
            .nodes
            .iter()
            .filter(|q| atlas.charts[q.chart].pou_at(q.coords) > 0.0)
            .map(|q| SurfacePoint::new(&atlas.charts[q.chart], q.coords, t).unwrap())
            .collect()
    }

    fn rho0() -> Expr {
        Expr::parse("1 + 0.3*x1*x2 + 0.2*x3").unwrap()
    }

    #[test]
    fn dilating_sphere_solves_the_full_system() {
        let m = dilating_sphere(&rho0(), &Expr::parse("1 + x1^2").unwrap(), 1.0, 0.5, 0.7, 0.3);
        for t in [0.0, 0.4] {
            for p in points((m.radius)(t), t) {
                let r = residual_full(&m.fields, &m.coeffs, &p).unwrap();
                assert!(r.max() < 1e-12, "{r:?}");
                assert!(residual_conservative(&m.fields, &m.coeffs, &p).unwrap().max() < 1e-12);
            }
        }
    }

    #[test]
    fn rotating_sphere_solves_all_momentum_forms() {
        let m = rotating_sphere(1.3, 1.0, 0.5, 0.7, 0.3);
        for p in points(1.0, 0.2) {
            assert!(residual_full(&m.fields, &m.coeffs, &p).unwrap().max() < 1e-12);
            let t = residual_tangential(&m.fields, &m.coeffs, &p).unwrap();
            assert!(t.lines.max() < 1e-12 && t.normal_velocity < 1e-14);
            assert!(residual_noncanonical(&m.fields, &m.coeffs, &p).unwrap().max() < 1e-12);
        }
    }

    #[test]
    fn dilating_normal_flow_solves_the_noncanonical_system() {
        let m = dilating_normal_flow(&rho0(), 0.8);
        for p in points(1.5, 0.5) {
            assert!(residual_noncanonical(&m.fields, &m.coeffs, &p).unwrap().max() < 1e-12);
        }
    }

    #[test]
    fn barotropic_rotation_is_steady() {
        let f = barotropic_rotation(1.2, 1.0);
        for p in points(1.0, 0.0) {
            let r = residual_barotropic(&f, &PressureLaw::Quadratic, &p, BarotropicVariant::Tangential).unwrap();
            assert!(r.max() < 1e-13, "{r:?}");
        }
    }

    #[test]
    fn thermo_state_is_consistent() {
        let m = dilating_thermo(&rho0(), 1.0, 0.5, 0.7);
        for t in [0.0, 0.3] {
            for p in points((m.radius)(t), t) {
                let th = thermo_quantities(&m.fields, &m.coeffs, &p).unwrap();
                assert!(th.gibbs_residual.abs() < 1e-12);
                assert!(th.enthalpy_residual.abs() < 1e-12, "{th:?}");
                assert!(th.entropy_residual.abs() < 1e-12);
                assert!(th.free_energy_residual.abs() < 1e-12);
                let r = residual_full(&m.fields, &m.coeffs, &p).unwrap();
                assert!(r.mass.abs() < 1e-13 && r.energy.abs() < 1e-12);
            }
        }
    }
}
