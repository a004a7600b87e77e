//! Field evaluators over ambient space and time.

use crate::ad::{Dual, Real};
use crate::error::Result;
use crate::expr::Expr;

/// Step for finite-difference derivatives of fields.
pub const FD_STEP: f64 = 1.0 / 1024.0;

/// How a field supplies its derivatives.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Derivatives {
    /// Dual-number derivatives of every order.
    #[default]
    Exact,
    /// Fourth-order central differences (cross-check mode).
    FiniteDifference,
    /// Exact first partials only; second partials are unavailable.
    FirstOrder,
}

/// Value, spatial gradient and time derivative of a scalar field.
#[derive(Clone, Copy, Debug)]
pub struct Jet<T> {
    pub v: T,
    pub grad: [T; 3],
    pub dt: T,
}

/// Value, spatial Jacobian and time derivative of a vector field.
/// `d[i][j]` is `∂_i v_j`.
#[derive(Clone, Copy, Debug)]
pub struct VecJet<T> {
    pub v: [T; 3],
    pub d: [[T; 3]; 3],
    pub dt: [T; 3],
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub expr: Expr,
    pub derivs: Derivatives,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub comps: [Expr; 3],
    pub derivs: Derivatives,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixField {
    pub comps: [[Expr; 3]; 3],
    pub derivs: Derivatives,
}

fn fd4<T: Real>(f: impl Fn(f64) -> T, h: f64) -> T {
    (f(h) - f(-h)) * (8.0 / (12.0 * h)) - (f(2.0 * h) - f(-2.0 * h)) * (1.0 / (12.0 * h))
}

fn scalar_jet<T: Real>(e: &Expr, mode: Derivatives, x: &[T; 3], t: T) -> Jet<T> {
    match mode {
        Derivatives::Exact | Derivatives::FirstOrder => {
            let xs: [Dual<T, 4>; 3] = std::array::from_fn(|i| Dual::var(x[i], i));
            let r = e.eval(&xs, Dual::var(t, 3));
            Jet { v: r.re, grad: [r.eps[0], r.eps[1], r.eps[2]], dt: r.eps[3] }
        }
        Derivatives::FiniteDifference => {
            let grad = std::array::from_fn(|i| {
                fd4(
                    |s| {
                        let mut y = *x;
                        y[i] = y[i] + s;
                        e.eval(&y, t)
                    },
                    FD_STEP,
                )
            });
            let dt = fd4(|s| e.eval(x, t + s), FD_STEP);
            Jet { v: e.eval(x, t), grad, dt }
        }
    }
}

impl ScalarField {
    pub fn new(expr: Expr) -> Self {
        ScalarField { expr, derivs: Derivatives::Exact }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(Expr::Num(c))
    }

    pub fn parse(src: &str) -> Result<Self> {
        Ok(Self::new(Expr::parse(src)?))
    }

    pub fn with_derivatives(mut self, d: Derivatives) -> Self {
        self.derivs = d;
        self
    }

    pub fn value<T: Real>(&self, x: &[T; 3], t: T) -> T {
        self.expr.eval(x, t)
    }

    pub fn jet<T: Real>(&self, x: &[T; 3], t: T) -> Jet<T> {
        scalar_jet(&self.expr, self.derivs, x, t)
    }

    pub fn has_second_derivatives(&self) -> bool {
        self.derivs != Derivatives::FirstOrder
    }
}

impl VectorField {
    pub fn new(comps: [Expr; 3]) -> Self {
        VectorField { comps, derivs: Derivatives::Exact }
    }

    pub fn zero() -> Self {
        Self::new([Expr::Num(0.0), Expr::Num(0.0), Expr::Num(0.0)])
    }

    pub fn constant(c: [f64; 3]) -> Self {
        Self::new(c.map(Expr::Num))
    }

    pub fn parse(srcs: [&str; 3]) -> Result<Self> {
        Ok(Self::new([Expr::parse(srcs[0])?, Expr::parse(srcs[1])?, Expr::parse(srcs[2])?]))
    }

    /// The position field `x`.
    pub fn position() -> Self {
        Self::new([Expr::x(0), Expr::x(1), Expr::x(2)])
    }

    /// Rigid rotation `ω × x`.
    pub fn rotation(w: [f64; 3]) -> Self {
        let x = |i| Expr::x(i);
        Self::new([
            w[1] * x(2) - w[2] * x(1),
            w[2] * x(0) - w[0] * x(2),
            w[0] * x(1) - w[1] * x(0),
        ])
    }

    pub fn with_derivatives(mut self, d: Derivatives) -> Self {
        self.derivs = d;
        self
    }

    pub fn value<T: Real>(&self, x: &[T; 3], t: T) -> [T; 3] {
        std::array::from_fn(|i| self.comps[i].eval(x, t))
    }

    pub fn jet<T: Real>(&self, x: &[T; 3], t: T) -> VecJet<T> {
        let js: [Jet<T>; 3] = std::array::from_fn(|j| scalar_jet(&self.comps[j], self.derivs, x, t));
        VecJet {
            v: js.map(|j| j.v),
            d: std::array::from_fn(|i| std::array::from_fn(|j| js[j].grad[i])),
            dt: js.map(|j| j.dt),
        }
    }

    pub fn has_second_derivatives(&self) -> bool {
        self.derivs != Derivatives::FirstOrder
    }

    pub fn component(&self, i: usize) -> ScalarField {
        ScalarField { expr: self.comps[i].clone(), derivs: self.derivs }
    }
}

impl MatrixField {
    pub fn new(comps: [[Expr; 3]; 3]) -> Self {
        MatrixField { comps, derivs: Derivatives::Exact }
    }

    pub fn value<T: Real>(&self, x: &[T; 3], t: T) -> [[T; 3]; 3] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.comps[i][j].eval(x, t)))
    }

    /// Jets of every entry, `out[i][j]` for entry `M_ij`.
    pub fn jet<T: Real>(&self, x: &[T; 3], t: T) -> [[Jet<T>; 3]; 3] {
        std::array::from_fn(|i| std::array::from_fn(|j| scalar_jet(&self.comps[i][j], self.derivs, x, t)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finite_differences_match_dual_numbers() {
        let f = ScalarField::parse("sin(x1*x2) + exp(0.3*x3)*t^2 + x1^3").unwrap();
        let g = f.clone().with_derivatives(Derivatives::FiniteDifference);
        let x = [0.4, -0.8, 0.6];
        let (a, b) = (f.jet(&x, 0.7), g.jet(&x, 0.7));
        for i in 0..3 {
            assert!((a.grad[i] - b.grad[i]).abs() < 1e-8);
        }
        assert!((a.dt - b.dt).abs() < 1e-8);
    }

    #[test]
    fn vector_jet_layout() {
        // v = (x2, 0, 0): only ∂_2 v_1 is nonzero
        let v = VectorField::parse(["x2", "0", "0"]).unwrap();
        let j = v.jet(&[1.0, 2.0, 3.0], 0.0);
        assert_eq!(j.d[1][0], 1.0);
        assert_eq!(j.d[0][1], 0.0);
    }

    #[test]
    fn rotation_field_is_cross_product() {
        let v = VectorField::rotation([0.0, 0.0, 2.0]);
        assert_eq!(v.value(&[1.0, 0.0, 0.0], 0.0), [0.0, 2.0, 0.0]);
    }
}
