//! Built-in pressure laws `p(ρ)` and flux laws `e_J(ζ)`.

use serde::Serialize;

use crate::ad::{Dual, Real};
use crate::error::{Error, Result};

/// Chemical potential `p(ρ)`; the effective pressure is `𝔭 = ρ p′(ρ) − p(ρ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum PressureLaw {
    /// `k ρ`
    Linear { k: f64 },
    /// `ρ²`
    Quadratic,
    /// `k ρ^γ`
    Polytropic { k: f64, gamma: f64 },
}

impl PressureLaw {
    pub fn p<T: Real>(&self, rho: T) -> T {
        match *self {
            PressureLaw::Linear { k } => rho * k,
            PressureLaw::Quadratic => rho * rho,
            PressureLaw::Polytropic { k, gamma } => rho.powf(gamma) * k,
        }
    }

    pub fn dp<T: Real>(&self, rho: T) -> T {
        let d = self.p(Dual::<T, 1>::var(rho, 0));
        d.eps[0]
    }

    /// `𝔭 = ρ p′(ρ) − p(ρ)`.
    pub fn effective<T: Real>(&self, rho: T) -> T {
        rho * self.dp(rho) - self.p(rho)
    }

    /// `d𝔭/dρ = ρ p″(ρ)`.
    pub fn effective_slope<T: Real>(&self, rho: T) -> T {
        self.effective(Dual::<T, 1>::var(rho, 0)).eps[0]
    }

    pub fn name(&self) -> &'static str {
        match self {
            PressureLaw::Linear { .. } => "linear",
            PressureLaw::Quadratic => "quadratic",
            PressureLaw::Polytropic { .. } => "polytropic",
        }
    }

    pub fn by_name(name: &str, params: &[f64]) -> Result<PressureLaw> {
        let arg = |i: usize, d: f64| params.get(i).copied().unwrap_or(d);
        match name {
            "linear" => Ok(PressureLaw::Linear { k: arg(0, 1.0) }),
            "quadratic" => Ok(PressureLaw::Quadratic),
            "polytropic" => Ok(PressureLaw::Polytropic { k: arg(0, 1.0), gamma: arg(1, 1.4) }),
            _ => Err(Error::Invalid(format!("unknown pressure law `{name}`"))),
        }
    }
}

/// Flux energy `e_J(ζ)` of `ζ = |grad_Γ f|²`; the flux is `e_J′(ζ) grad_Γ f`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum FluxLaw {
    /// `κ ζ`
    Linear { kappa: f64 },
    /// `ζ²`
    Quadratic,
    /// `c ζ^m`
    Power { c: f64, m: f64 },
}

impl FluxLaw {
    pub fn e<T: Real>(&self, z: T) -> T {
        match *self {
            FluxLaw::Linear { kappa } => z * kappa,
            FluxLaw::Quadratic => z * z,
            FluxLaw::Power { c, m } => z.powf(m) * c,
        }
    }

    pub fn de<T: Real>(&self, z: T) -> T {
        self.e(Dual::<T, 1>::var(z, 0)).eps[0]
    }

    pub fn d2e<T: Real>(&self, z: T) -> T {
        self.de(Dual::<T, 1>::var(z, 0)).eps[0]
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, FluxLaw::Linear { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            FluxLaw::Linear { .. } => "linear",
            FluxLaw::Quadratic => "quadratic",
            FluxLaw::Power { .. } => "power",
        }
    }

    pub fn by_name(name: &str, params: &[f64]) -> Result<FluxLaw> {
        let arg = |i: usize, d: f64| params.get(i).copied().unwrap_or(d);
        match name {
            "linear" => Ok(FluxLaw::Linear { kappa: arg(0, 1.0) }),
            "quadratic" => Ok(FluxLaw::Quadratic),
            "power" => Ok(FluxLaw::Power { c: arg(0, 1.0), m: arg(1, 1.5) }),
            _ => Err(Error::Invalid(format!("unknown flux law `{name}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn effective_pressure_examples() {
        assert_eq!(PressureLaw::Linear { k: 1.0 }.effective(2.5), 0.0);
        assert_eq!(PressureLaw::Quadratic.effective(3.0), 9.0);
        let poly = PressureLaw::Polytropic { k: 2.0, gamma: 1.4 };
        assert!((poly.effective(1.7) - 0.4 * poly.p(1.7)).abs() < 1e-14);
    }

    #[test]
    fn flux_derivatives() {
        assert_eq!(FluxLaw::Quadratic.de(3.0), 6.0);
        assert_eq!(FluxLaw::Quadratic.d2e(3.0), 2.0);
        assert_eq!(FluxLaw::Linear { kappa: 0.7 }.de(5.0), 0.7);
    }
}
