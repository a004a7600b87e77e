//! Seeded random draws of smooth analytic fields, grouped in families.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::Serialize;

use crate::expr::Expr;
use crate::field::{ScalarField, VectorField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Family {
    /// Polynomials of degree at most two in `x`, affine in `t`.
    Quadratic,
    /// Cubic polynomials.
    Cubic,
    /// Sums of shifted sines of linear phases.
    Trigonometric,
    /// Exponential of a linear form times an affine polynomial.
    ExpPoly,
    /// Products and quotients mixing the other families.
    Mixed,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::Quadratic, Family::Cubic, Family::Trigonometric, Family::ExpPoly, Family::Mixed];

    pub fn name(self) -> &'static str {
        match self {
            Family::Quadratic => "quadratic",
            Family::Cubic => "cubic",
            Family::Trigonometric => "trigonometric",
            Family::ExpPoly => "exp-poly",
            Family::Mixed => "mixed",
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn coef(r: &mut ChaCha8Rng) -> f64 {
    r.gen_range(-1.0..1.0)
}

fn linear(r: &mut ChaCha8Rng) -> Expr {
    let mut e = Expr::Num(coef(r));
    for i in 0..3 {
        e = e + coef(r) * Expr::x(i);
    }
    e
}

fn monomials(deg: u32) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for a in 0..=deg {
        for b in 0..=deg - a {
            for c in 0..=deg - a - b {
                out.push([a, b, c]);
            }
        }
    }
    out
}

fn poly(r: &mut ChaCha8Rng, deg: u32) -> Expr {
    let mut e = Expr::Num(0.0);
    for m in monomials(deg) {
        let mut term = Expr::Num(coef(r));
        for (i, &k) in m.iter().enumerate() {
            if k > 0 {
                term = term * Expr::x(i).powi(k as i32);
            }
        }
        e = e + term;
    }
    e
}

fn time_factor(r: &mut ChaCha8Rng) -> Expr {
    1.0 + 0.5 * coef(r) * Expr::t()
}

fn trig(r: &mut ChaCha8Rng) -> Expr {
    let mut e = Expr::Num(0.0);
    for _ in 0..2 {
        let phase = linear(r) + coef(r) * Expr::t();
        e = e + coef(r) * phase.sin();
    }
    e
}

/// A scalar field drawn from `family`.
pub fn scalar(family: Family, r: &mut ChaCha8Rng) -> ScalarField {
    let e = match family {
        Family::Quadratic => poly(r, 2) * time_factor(r),
        Family::Cubic => poly(r, 3) + coef(r) * Expr::t() * poly(r, 1),
        Family::Trigonometric => trig(r),
        Family::ExpPoly => (0.5 * linear(r) + 0.3 * coef(r) * Expr::t()).exp() * poly(r, 1),
        Family::Mixed => {
            poly(r, 2) * trig(r) + poly(r, 1) / (2.0 + 0.5 * linear(r).sin() + 0.2 * Expr::t())
        }
    };
    ScalarField::new(e)
}

/// A vector field with independent components from `family`.
pub fn vector(family: Family, r: &mut ChaCha8Rng) -> VectorField {
    VectorField::new([scalar(family, r).expr, scalar(family, r).expr, scalar(family, r).expr])
}

/// A field with values in `[lo, hi]`.
pub fn bounded(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> ScalarField {
    let mid = 0.5 * (lo + hi);
    let amp = 0.5 * (hi - lo);
    let phase = linear(r) + 0.5 * coef(r) * Expr::t();
    ScalarField::new(mid + amp * phase.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_deterministic() {
        for fam in Family::ALL {
            let a = scalar(fam, &mut rng(7));
            let b = scalar(fam, &mut rng(7));
            assert_eq!(a, b);
            let x = [0.3, -0.2, 0.9];
            assert!(a.value(&x, 0.4).is_finite());
        }
    }

    #[test]
    fn bounded_draws_stay_in_range() {
        let mut r = rng(3);
        for _ in 0..20 {
            let f = bounded(&mut r, 0.5, 2.0);
            let v = f.value(&[coef(&mut r), coef(&mut r), coef(&mut r)], 0.3);
            assert!((0.5..=2.0).contains(&v));
        }
    }
}
