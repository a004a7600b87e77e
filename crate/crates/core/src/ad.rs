//! Forward-mode automatic differentiation.
//!
//! [`Dual`] carries a value and `N` partial derivatives. The component type is
//! itself generic, so duals nest: `Dual<Dual<f64, 2>, 4>` gives first
//! derivatives in four ambient variables whose entries also carry derivatives
//! in two chart coordinates.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Scalar arithmetic shared by `f64` and dual numbers.
pub trait Real:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    fn cst(c: f64) -> Self;
    /// Innermost real part.
    fn re(&self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn powf(self, p: f64) -> Self;

    fn zero() -> Self {
        Self::cst(0.0)
    }
    fn one() -> Self {
        Self::cst(1.0)
    }
}

impl Real for f64 {
    fn cst(c: f64) -> Self {
        c
    }
    fn re(&self) -> f64 {
        *self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
}

/// Value plus `N` first-order partial derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T, const N: usize> {
    pub re: T,
    pub eps: [T; N],
}

pub type D2 = Dual<f64, 2>;

impl<T: Real, const N: usize> Dual<T, N> {
    pub fn constant(re: T) -> Self {
        Dual { re, eps: [T::zero(); N] }
    }

    /// Independent variable number `i`.
    pub fn var(re: T, i: usize) -> Self {
        let mut eps = [T::zero(); N];
        eps[i] = T::one();
        Dual { re, eps }
    }

    fn chain(self, f: T, df: T) -> Self {
        Dual { re: f, eps: self.eps.map(|e| e * df) }
    }
}

impl<T: Real, const N: usize> Add for Dual<T, N> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual { re: self.re + o.re, eps: std::array::from_fn(|i| self.eps[i] + o.eps[i]) }
    }
}

impl<T: Real, const N: usize> Sub for Dual<T, N> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual { re: self.re - o.re, eps: std::array::from_fn(|i| self.eps[i] - o.eps[i]) }
    }
}

impl<T: Real, const N: usize> Mul for Dual<T, N> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual {
            re: self.re * o.re,
            eps: std::array::from_fn(|i| self.eps[i] * o.re + self.re * o.eps[i]),
        }
    }
}

impl<T: Real, const N: usize> Div for Dual<T, N> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = T::one() / o.re;
        let q = self.re * inv;
        Dual { re: q, eps: std::array::from_fn(|i| (self.eps[i] - q * o.eps[i]) * inv) }
    }
}

impl<T: Real, const N: usize> Neg for Dual<T, N> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual { re: -self.re, eps: self.eps.map(|e| -e) }
    }
}

impl<T: Real, const N: usize> Add<f64> for Dual<T, N> {
    type Output = Self;
    fn add(self, c: f64) -> Self {
        Dual { re: self.re + c, eps: self.eps }
    }
}

impl<T: Real, const N: usize> Sub<f64> for Dual<T, N> {
    type Output = Self;
    fn sub(self, c: f64) -> Self {
        Dual { re: self.re - c, eps: self.eps }
    }
}

impl<T: Real, const N: usize> Mul<f64> for Dual<T, N> {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        Dual { re: self.re * c, eps: self.eps.map(|e| e * c) }
    }
}

impl<T: Real, const N: usize> Div<f64> for Dual<T, N> {
    type Output = Self;
    fn div(self, c: f64) -> Self {
        Dual { re: self.re / c, eps: self.eps.map(|e| e / c) }
    }
}

impl<T: Real, const N: usize> AddAssign for Dual<T, N> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real, const N: usize> SubAssign for Dual<T, N> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Real, const N: usize> MulAssign for Dual<T, N> {
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl<T: Real, const N: usize> Real for Dual<T, N> {
    fn cst(c: f64) -> Self {
        Dual::constant(T::cst(c))
    }
    fn re(&self) -> f64 {
        self.re.re()
    }
    fn sin(self) -> Self {
        let (s, c) = (self.re.sin(), self.re.cos());
        self.chain(s, c)
    }
    fn cos(self) -> Self {
        let (s, c) = (self.re.sin(), self.re.cos());
        self.chain(c, -s)
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }
    fn ln(self) -> Self {
        self.chain(self.re.ln(), T::one() / self.re)
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, T::cst(0.5) / s)
    }
    fn powi(self, n: i32) -> Self {
        match n {
            0 => Self::one(),
            1 => self,
            _ => self.chain(self.re.powi(n), self.re.powi(n - 1) * n as f64),
        }
    }
    fn powf(self, p: f64) -> Self {
        self.chain(self.re.powf(p), self.re.powf(p - 1.0) * p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_quotient_rules() {
        let x = Dual::<f64, 2>::var(1.5, 0);
        let y = Dual::<f64, 2>::var(-0.5, 1);
        let f = x * y / (x + 2.0);
        // d/dx = y*2/(x+2)^2, d/dy = x/(x+2)
        assert!((f.eps[0] - (-0.5 * 2.0 / 3.5f64.powi(2))).abs() < 1e-15);
        assert!((f.eps[1] - 1.5 / 3.5).abs() < 1e-15);
    }

    #[test]
    fn nested_duals_give_second_derivatives() {
        // f = sin(x) exp(x); f'' = 2 cos(x) exp(x)
        let x0 = 0.7;
        let inner = Dual::<f64, 1>::var(x0, 0);
        let x = Dual::<Dual<f64, 1>, 1> { re: inner, eps: [Dual::constant(1.0)] };
        let f = x.sin() * x.exp();
        assert!((f.eps[0].eps[0] - 2.0 * x0.cos() * x0.exp()).abs() < 1e-14);
    }

    #[test]
    fn powers() {
        let x = Dual::<f64, 1>::var(2.0, 0);
        assert_eq!(x.powi(3).eps[0], 12.0);
        assert!((x.powf(0.5).eps[0] - 0.5 / 2f64.sqrt()).abs() < 1e-15);
        assert!((x.sqrt().eps[0] - 0.5 / 2f64.sqrt()).abs() < 1e-15);
        assert!((x.ln().eps[0] - 0.5).abs() < 1e-15);
        assert_eq!(x.powi(0).eps[0], 0.0);
    }
}
