//! Small fixed-size vector and matrix helpers, generic over [`Real`].

use crate::ad::Real;

pub type V3<T> = [T; 3];
pub type M3<T> = [[T; 3]; 3];

pub fn dot<T: Real>(a: &V3<T>, b: &V3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross<T: Real>(a: &V3<T>, b: &V3<T>) -> V3<T> {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn norm<T: Real>(a: &V3<T>) -> T {
    dot(a, a).sqrt()
}

pub fn add<T: Real>(a: &V3<T>, b: &V3<T>) -> V3<T> {
    std::array::from_fn(|i| a[i] + b[i])
}

pub fn sub<T: Real>(a: &V3<T>, b: &V3<T>) -> V3<T> {
    std::array::from_fn(|i| a[i] - b[i])
}

pub fn scale<T: Real>(a: &V3<T>, s: T) -> V3<T> {
    a.map(|v| v * s)
}

pub fn matvec<T: Real>(m: &M3<T>, v: &V3<T>) -> V3<T> {
    std::array::from_fn(|i| dot(&m[i], v))
}

pub fn matmul<T: Real>(a: &M3<T>, b: &M3<T>) -> M3<T> {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j]))
}

pub fn transpose<T: Real>(a: &M3<T>) -> M3<T> {
    std::array::from_fn(|i| std::array::from_fn(|j| a[j][i]))
}

/// `P A P` for a projector `P`.
pub fn sandwich<T: Real>(p: &M3<T>, a: &M3<T>) -> M3<T> {
    matmul(&matmul(p, a), p)
}

/// Symmetric part `(A + Aᵀ)/2`.
pub fn sym<T: Real>(a: &M3<T>) -> M3<T> {
    std::array::from_fn(|i| std::array::from_fn(|j| (a[i][j] + a[j][i]) * 0.5))
}

/// Frobenius inner product `A : B`.
pub fn ddot<T: Real>(a: &M3<T>, b: &M3<T>) -> T {
    let mut s = T::zero();
    for i in 0..3 {
        for j in 0..3 {
            s += a[i][j] * b[i][j];
        }
    }
    s
}

pub fn trace<T: Real>(a: &M3<T>) -> T {
    a[0][0] + a[1][1] + a[2][2]
}

pub fn mat_scale<T: Real>(a: &M3<T>, s: T) -> M3<T> {
    a.map(|r| r.map(|v| v * s))
}

pub fn mat_add<T: Real>(a: &M3<T>, b: &M3<T>) -> M3<T> {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][j] + b[i][j]))
}

pub fn mat_sub<T: Real>(a: &M3<T>, b: &M3<T>) -> M3<T> {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][j] - b[i][j]))
}

pub fn identity<T: Real>() -> M3<T> {
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { T::one() } else { T::zero() }))
}

pub fn outer<T: Real>(a: &V3<T>, b: &V3<T>) -> M3<T> {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i] * b[j]))
}

pub fn re3<T: Real>(a: &V3<T>) -> V3<f64> {
    a.map(|v| v.re())
}

pub fn re33<T: Real>(a: &M3<T>) -> M3<f64> {
    a.map(|r| r.map(|v| v.re()))
}

pub fn max_abs3(a: &V3<f64>) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn max_abs33(a: &M3<f64>) -> f64 {
    a.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
}
