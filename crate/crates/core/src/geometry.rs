//! Chart atlases for closed surfaces, pointwise metric data and surface
//! quadrature.
//!
//! A surface is covered by charts `X ↦ x`. Each chart carries a smooth
//! partition-of-unity weight so that `∫ f dH² = Σ_m ∫ Ψ_m f √J dX`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::ad::{Dual, Real, D2};
use crate::error::{Error, Result};
use crate::linalg::{cross, dot, norm, V3};

/// Smallest admissible Gram determinant.
pub const JAC_EPS: f64 = 1e-14;

/// Finite-difference step as a fraction of the chart extent.
pub const CHART_FD_FRACTION: f64 = 1.0 / 1024.0;

/// Parametrization of a single chart.
#[derive(Clone, Debug, PartialEq)]
pub enum Param {
    /// `(X₁, X₂, 0)`.
    Plane,
    /// Latitude-longitude sphere `R·Q·(sinθ cosφ, sinθ sinφ, cosθ)` with a
    /// rotation `Q` (rows), `X = (θ, φ)`.
    LatLong { radius: f64, rot: [[f64; 3]; 3] },
    /// `((R + r cos X₂) cos X₁, (R + r cos X₂) sin X₁, r sin X₂)`.
    Torus { major: f64, minor: f64 },
}

impl Param {
    pub fn eval<T: Real>(&self, c: [T; 2]) -> V3<T> {
        match self {
            Param::Plane => [c[0], c[1], T::zero()],
            Param::LatLong { radius, rot } => {
                let (st, ct) = (c[0].sin(), c[0].cos());
                let s = [st * c[1].cos(), st * c[1].sin(), ct];
                std::array::from_fn(|i| (s[0] * rot[i][0] + s[1] * rot[i][1] + s[2] * rot[i][2]) * *radius)
            }
            Param::Torus { major, minor } => {
                let ring = c[1].cos() * *minor + *major;
                [ring * c[0].cos(), ring * c[0].sin(), c[1].sin() * *minor]
            }
        }
    }
}

/// Rectangle of chart coordinates; periodic directions wrap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub periodic: [bool; 2],
}

impl Domain {
    pub fn extent(&self, a: usize) -> f64 {
        self.hi[a] - self.lo[a]
    }

    pub fn contains(&self, c: [f64; 2]) -> bool {
        (0..2).all(|a| self.periodic[a] || (c[a] > self.lo[a] && c[a] < self.hi[a]))
    }
}

/// Transition band of a latitude-type partition of unity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Blend {
    /// Weight of the primary chart is 1 for `|x·a|/R ≤ inner`.
    pub inner: f64,
    /// Weight of the primary chart is 0 for `|x·a|/R ≥ outer`.
    pub outer: f64,
    /// Continuity order of the polynomial transition.
    pub order: u32,
}

impl Blend {
    /// Wide transition, tuned for surface quadrature.
    pub const QUADRATURE: Blend = Blend { inner: 0.1, outer: 0.95, order: 6 };
    /// Symmetric transition that keeps both charts away from their poles,
    /// used by the grid solvers.
    pub const SOLVER: Blend = Blend { inner: 0.6, outer: 0.8, order: 6 };

    /// `1` below `inner²`, `0` above `outer²`, a `C^order` polynomial between.
    pub fn chi(&self, s: f64) -> f64 {
        let (a, b) = (self.inner * self.inner, self.outer * self.outer);
        1.0 - smoothstep((s - a) / (b - a), self.order)
    }
}

/// `C^k` polynomial ramp from 0 at `u ≤ 0` to 1 at `u ≥ 1`.
pub fn smoothstep(u: f64, k: u32) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    if u > 0.5 {
        return 1.0 - smoothstep(1.0 - u, k);
    }
    let k = k as u64;
    let mut s = 0.0;
    for j in 0..=k {
        s += (binom(k + j, j) * binom(2 * k + 1, k - j)) as f64 * (-u).powi(j as i32);
    }
    s * u.powi(k as i32 + 1)
}

fn binom(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Partition-of-unity weight of a chart as a function of the surface point.
#[derive(Clone, Debug, PartialEq)]
pub enum Pou {
    One,
    /// `χ((x·axis/R)²)`, or `1 − χ` when `complement` is set.
    Band { axis: [f64; 3], radius: f64, blend: Blend, complement: bool },
}

impl Pou {
    pub fn weight(&self, x: &V3<f64>) -> f64 {
        match self {
            Pou::One => 1.0,
            Pou::Band { axis, radius, blend, complement } => {
                let c = dot(x, axis) / radius;
                let w = blend.chi(c * c);
                if *complement {
                    1.0 - w
                } else {
                    w
                }
            }
        }
    }
}

/// How chart derivatives are obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum GeomDerivs {
    #[default]
    Analytic,
    FiniteDifference,
}

/// Position and first and second chart derivatives at one chart point.
/// `d1[α]` is `∂x/∂X_α`, `d2[α][β]` is `∂²x/∂X_α∂X_β`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChartJet {
    pub x: V3<f64>,
    pub d1: [V3<f64>; 2],
    pub d2: [[V3<f64>; 2]; 2],
}

/// Offsets of the 17-point stencil in units of the step.
pub const STENCIL: [[f64; 2]; 17] = [
    [0.0, 0.0],
    [1.0, 0.0],
    [-1.0, 0.0],
    [2.0, 0.0],
    [-2.0, 0.0],
    [0.0, 1.0],
    [0.0, -1.0],
    [0.0, 2.0],
    [0.0, -2.0],
    [1.0, 1.0],
    [1.0, -1.0],
    [-1.0, 1.0],
    [-1.0, -1.0],
    [2.0, 2.0],
    [2.0, -2.0],
    [-2.0, 2.0],
    [-2.0, -2.0],
];

impl ChartJet {
    /// Fourth-order finite-difference jet from values on [`STENCIL`].
    pub fn from_stencil(p: &[V3<f64>; 17], h: [f64; 2]) -> ChartJet {
        let first = |a: usize| -> V3<f64> {
            let o = 1 + 4 * a;
            std::array::from_fn(|i| (8.0 * (p[o][i] - p[o + 1][i]) - (p[o + 2][i] - p[o + 3][i])) / (12.0 * h[a]))
        };
        let pure = |a: usize| -> V3<f64> {
            let o = 1 + 4 * a;
            std::array::from_fn(|i| {
                (-p[o + 2][i] + 16.0 * p[o][i] - 30.0 * p[0][i] + 16.0 * p[o + 1][i] - p[o + 3][i]) / (12.0 * h[a] * h[a])
            })
        };
        let mixed: V3<f64> = std::array::from_fn(|i| {
            let d1 = (p[9][i] - p[10][i] - p[11][i] + p[12][i]) / (4.0 * h[0] * h[1]);
            let d2 = (p[13][i] - p[14][i] - p[15][i] + p[16][i]) / (16.0 * h[0] * h[1]);
            (4.0 * d1 - d2) / 3.0
        });
        ChartJet { x: p[0], d1: [first(0), first(1)], d2: [[pure(0), mixed], [mixed, pure(1)]] }
    }

    /// Chart position and tangent vectors as duals in the chart coordinates.
    pub fn seeded(&self) -> (V3<D2>, [V3<D2>; 2]) {
        let x = std::array::from_fn(|i| Dual { re: self.x[i], eps: [self.d1[0][i], self.d1[1][i]] });
        let g = std::array::from_fn(|a| {
            std::array::from_fn(|i| Dual { re: self.d1[a][i], eps: [self.d2[a][0][i], self.d2[a][1][i]] })
        });
        (x, g)
    }
}

/// Geometric frame at a surface point, generic in the scalar type.
#[derive(Clone, Copy, Debug)]
pub struct Frame<T> {
    pub x: V3<T>,
    /// Tangent vectors `g_α`.
    pub g: [V3<T>; 2],
    pub gram: [[T; 2]; 2],
    pub ginv: [[T; 2]; 2],
    pub jac: T,
    pub n: V3<T>,
    /// Tangential projection `I − n ⊗ n`.
    pub proj: [[T; 3]; 3],
    /// Dual basis `g^α = g^{αβ} g_β`.
    pub gup: [V3<T>; 2],
}

impl<T: Real> Frame<T> {
    pub fn new(x: V3<T>, g: [V3<T>; 2], orientation: f64) -> Frame<T> {
        let gram = [[dot(&g[0], &g[0]), dot(&g[0], &g[1])], [dot(&g[1], &g[0]), dot(&g[1], &g[1])]];
        let jac = gram[0][0] * gram[1][1] - gram[0][1] * gram[1][0];
        let ginv = [[gram[1][1] / jac, -gram[0][1] / jac], [-gram[1][0] / jac, gram[0][0] / jac]];
        let nn = cross(&g[0], &g[1]);
        let len = norm(&nn);
        let n: V3<T> = nn.map(|v| v * orientation / len);
        let proj = std::array::from_fn(|i| {
            std::array::from_fn(|j| if i == j { T::one() - n[i] * n[j] } else { -(n[i] * n[j]) })
        });
        let gup = std::array::from_fn(|a| std::array::from_fn(|i| ginv[a][0] * g[0][i] + ginv[a][1] * g[1][i]));
        Frame { x, g, gram, ginv, jac, n, proj, gup }
    }
}

/// Pointwise geometry of a surface point.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MetricState {
    pub x: V3<f64>,
    pub tangents: [V3<f64>; 2],
    pub gram: [[f64; 2]; 2],
    pub inverse_gram: [[f64; 2]; 2],
    pub jacobian: f64,
    pub normal: V3<f64>,
    pub projection: [[f64; 3]; 3],
    pub mean_curvature: f64,
}

impl MetricState {
    /// Metric data from a chart jet; the mean curvature is `−div_Γ n` with the
    /// normal differentiated along the chart.
    pub fn from_jet(jet: &ChartJet, orientation: f64, coords: [f64; 2]) -> Result<MetricState> {
        let f = seeded_frame(jet, orientation, coords)?;
        let mut div_n = 0.0;
        for b in 0..2 {
            for i in 0..3 {
                div_n += f.gup[b][i].re * f.n[i].eps[b];
            }
        }
        Ok(MetricState {
            x: f.x.map(|v| v.re),
            tangents: f.g.map(|r| r.map(|v| v.re)),
            gram: f.gram.map(|r| r.map(|v| v.re)),
            inverse_gram: f.ginv.map(|r| r.map(|v| v.re)),
            jacobian: f.jac.re,
            normal: f.n.map(|v| v.re),
            projection: f.proj.map(|r| r.map(|v| v.re)),
            mean_curvature: -div_n,
        })
    }

    /// Dual basis vectors `g^α`.
    pub fn dual_basis(&self) -> [V3<f64>; 2] {
        let (gi, g) = (&self.inverse_gram, &self.tangents);
        std::array::from_fn(|a| std::array::from_fn(|i| gi[a][0] * g[0][i] + gi[a][1] * g[1][i]))
    }
}

/// Frame whose entries carry derivatives with respect to the chart coordinates.
pub fn seeded_frame(jet: &ChartJet, orientation: f64, coords: [f64; 2]) -> Result<Frame<D2>> {
    let (x, g) = jet.seeded();
    let f = Frame::new(x, g, orientation);
    if !(f.jac.re > JAC_EPS) {
        return Err(Error::SingularMetric { jac: f.jac.re, coords, threshold: JAC_EPS });
    }
    Ok(f)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub id: usize,
    pub param: Param,
    pub domain: Domain,
    /// `+1` or `−1`; multiplies `g₁ × g₂` to give the declared normal.
    pub orientation: f64,
    pub pou: Pou,
    pub derivs: GeomDerivs,
    /// Integration breakpoints per direction (non-periodic directions only);
    /// the first and last entries bound the support of the weight.
    pub quad_breaks: [Vec<f64>; 2],
}

impl Chart {
    pub fn position(&self, c: [f64; 2]) -> V3<f64> {
        self.param.eval(c)
    }

    /// Partition-of-unity weight at chart coordinates.
    pub fn pou_at(&self, c: [f64; 2]) -> f64 {
        self.pou.weight(&self.position(c))
    }

    pub fn fd_steps(&self) -> [f64; 2] {
        [self.domain.extent(0) * CHART_FD_FRACTION, self.domain.extent(1) * CHART_FD_FRACTION]
    }

    pub fn jet(&self, c: [f64; 2]) -> Result<ChartJet> {
        if !self.domain.contains(c) {
            return Err(Error::OutOfDomain { chart: self.id, coords: c });
        }
        Ok(match self.derivs {
            GeomDerivs::Analytic => {
                let xs: [Dual<D2, 2>; 2] = std::array::from_fn(|a| Dual {
                    re: Dual::var(c[a], a),
                    eps: std::array::from_fn(|b| D2::cst(if a == b { 1.0 } else { 0.0 })),
                });
                let r = self.param.eval(xs);
                ChartJet {
                    x: r.map(|v| v.re.re),
                    d1: std::array::from_fn(|a| r.map(|v| v.eps[a].re)),
                    d2: std::array::from_fn(|a| std::array::from_fn(|b| r.map(|v| v.eps[a].eps[b]))),
                }
            }
            GeomDerivs::FiniteDifference => {
                let h = self.fd_steps();
                let pts = STENCIL.map(|o| self.param.eval([c[0] + o[0] * h[0], c[1] + o[1] * h[1]]));
                ChartJet::from_stencil(&pts, h)
            }
        })
    }

    pub fn frame(&self, c: [f64; 2]) -> Result<Frame<D2>> {
        seeded_frame(&self.jet(c)?, self.orientation, c)
    }

    /// Chart coordinates of a surface point, when the chart has an inverse.
    pub fn locate(&self, x: &V3<f64>) -> Option<[f64; 2]> {
        match &self.param {
            Param::Plane => Some([x[0], x[1]]),
            Param::LatLong { radius, rot } => {
                let s: V3<f64> = std::array::from_fn(|j| (rot[0][j] * x[0] + rot[1][j] * x[1] + rot[2][j] * x[2]) / radius);
                let theta = s[2].clamp(-1.0, 1.0).acos();
                let phi = s[1].atan2(s[0]).rem_euclid(2.0 * PI);
                Some([theta, phi])
            }
            Param::Torus { major, minor } => {
                let phi = x[1].atan2(x[0]).rem_euclid(2.0 * PI);
                let rho = (x[0] * x[0] + x[1] * x[1]).sqrt() - major;
                Some([phi, (x[2] / minor).atan2(rho / minor).rem_euclid(2.0 * PI)])
            }
        }
    }
}

/// Pointwise metric of a chart point.
pub fn metric_at(chart: &Chart, c: [f64; 2], _t: f64) -> Result<MetricState> {
    MetricState::from_jet(&chart.jet(c)?, chart.orientation, c)
}

/// Mean curvature `H_Γ = −div_Γ n` at a chart point.
pub fn mean_curvature_at(chart: &Chart, c: [f64; 2], t: f64) -> Result<f64> {
    Ok(metric_at(chart, c, t)?.mean_curvature)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum SurfaceKind {
    Plane,
    Sphere { radius: f64 },
    Torus { major: f64, minor: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChartAtlas {
    pub kind: SurfaceKind,
    pub charts: Vec<Chart>,
}

const PERMUTE: [[f64; 3]; 3] = [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
const IDENTITY: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

impl ChartAtlas {
    /// Unit-square patch of the plane `x₃ = 0` (not closed; pointwise use).
    pub fn plane() -> ChartAtlas {
        ChartAtlas {
            kind: SurfaceKind::Plane,
            charts: vec![Chart {
                id: 0,
                param: Param::Plane,
                domain: Domain { lo: [-1.0, -1.0], hi: [1.0, 1.0], periodic: [false, false] },
                orientation: 1.0,
                pou: Pou::One,
                derivs: GeomDerivs::Analytic,
                quad_breaks: [vec![-1.0, 1.0], vec![-1.0, 1.0]],
            }],
        }
    }

    pub fn sphere(radius: f64) -> ChartAtlas {
        Self::sphere_with(radius, Blend::QUADRATURE)
    }

    /// Two latitude-longitude charts, the second with its poles on the
    /// `x₁` axis. The first chart's weight depends on `x₃` only and vanishes
    /// near `±e₃`; the second takes the complement, which vanishes near `±e₁`.
    pub fn sphere_with(radius: f64, blend: Blend) -> ChartAtlas {
        let domain = Domain { lo: [0.0, 0.0], hi: [PI, 2.0 * PI], periodic: [false, true] };
        let (ti, to) = (blend.inner.acos(), blend.outer.acos());
        let first = Chart {
            id: 0,
            param: Param::LatLong { radius, rot: IDENTITY },
            domain,
            orientation: 1.0,
            pou: Pou::Band { axis: [0.0, 0.0, 1.0], radius, blend, complement: false },
            derivs: GeomDerivs::Analytic,
            quad_breaks: [vec![to, ti, PI - ti, PI - to], vec![]],
        };
        let edge = blend.inner.asin();
        let second = Chart {
            id: 1,
            param: Param::LatLong { radius, rot: PERMUTE },
            domain,
            orientation: 1.0,
            pou: Pou::Band { axis: [0.0, 0.0, 1.0], radius, blend, complement: true },
            derivs: GeomDerivs::Analytic,
            quad_breaks: [vec![edge, PI - edge], vec![]],
        };
        ChartAtlas { kind: SurfaceKind::Sphere { radius }, charts: vec![first, second] }
    }

    /// Single doubly periodic chart with unit weight.
    pub fn torus(major: f64, minor: f64) -> ChartAtlas {
        ChartAtlas {
            kind: SurfaceKind::Torus { major, minor },
            charts: vec![Chart {
                id: 0,
                param: Param::Torus { major, minor },
                domain: Domain { lo: [0.0, 0.0], hi: [2.0 * PI, 2.0 * PI], periodic: [true, true] },
                orientation: 1.0,
                pou: Pou::One,
                derivs: GeomDerivs::Analytic,
                quad_breaks: [vec![], vec![]],
            }],
        }
    }

    pub fn with_derivs(mut self, d: GeomDerivs) -> ChartAtlas {
        for c in &mut self.charts {
            c.derivs = d;
        }
        self
    }

    pub fn is_closed(&self) -> bool {
        !matches!(self.kind, SurfaceKind::Plane)
    }

    /// Sum of the weights of all charts containing `x`.
    pub fn pou_sum(&self, x: &V3<f64>) -> f64 {
        self.charts
            .iter()
            .filter(|c| c.locate(x).is_some_and(|u| c.domain.contains(u)))
            .map(|c| c.pou.weight(x))
            .sum()
    }

    /// Checks the declared orientation against the outward direction of the
    /// built-in surfaces at a sample of chart points.
    pub fn check_orientation(&self) -> Result<()> {
        for chart in &self.charts {
            for i in 1..8 {
                for j in 0..8 {
                    let c = [
                        chart.domain.lo[0] + chart.domain.extent(0) * i as f64 / 8.0,
                        chart.domain.lo[1] + chart.domain.extent(1) * j as f64 / 8.0,
                    ];
                    let m = metric_at(chart, c, 0.0)?;
                    let center = match self.kind {
                        SurfaceKind::Plane => return Ok(()),
                        SurfaceKind::Sphere { .. } => [0.0; 3],
                        SurfaceKind::Torus { major, .. } => {
                            let r = (m.x[0] * m.x[0] + m.x[1] * m.x[1]).sqrt();
                            [major * m.x[0] / r, major * m.x[1] / r, 0.0]
                        }
                    };
                    let out: V3<f64> = std::array::from_fn(|k| m.x[k] - center[k]);
                    if dot(&m.normal, &out) <= 0.0 {
                        return Err(Error::Invalid(format!(
                            "chart {} normal points inward at ({:.3}, {:.3})",
                            chart.id, c[0], c[1]
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadNode {
    pub chart: usize,
    pub coords: [f64; 2],
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<QuadNode>,
    /// Gauss order per non-periodic direction (periodic directions use twice
    /// as many trapezoid nodes).
    pub order: usize,
}

fn axis_rule(chart: &Chart, a: usize, n: usize) -> Vec<(f64, f64)> {
    let d = &chart.domain;
    if d.periodic[a] {
        let m = 2 * n;
        let h = d.extent(a) / m as f64;
        return (0..m).map(|k| (d.lo[a] + k as f64 * h, h)).collect();
    }
    let br = &chart.quad_breaks[a];
    let total = br[br.len() - 1] - br[0];
    let mut out = Vec::new();
    for piece in br.windows(2) {
        let len = piece[1] - piece[0];
        let m = ((n as f64 * len / total).round() as usize).max(8);
        let (gx, gw) = gauss_legendre(m);
        for k in 0..m {
            out.push((0.5 * (piece[0] + piece[1]) + 0.5 * len * gx[k], 0.5 * len * gw[k]));
        }
    }
    out
}

impl QuadratureRule {
    /// Tensor rule: composite Gauss-Legendre with about `n` nodes across the
    /// weight support of each non-periodic direction, `2n` trapezoid nodes in
    /// each periodic direction.
    pub fn gauss(atlas: &ChartAtlas, n: usize) -> QuadratureRule {
        let mut nodes = Vec::new();
        for chart in &atlas.charts {
            let (r0, r1) = (axis_rule(chart, 0, n), axis_rule(chart, 1, n));
            for &(c0, w0) in &r0 {
                for &(c1, w1) in &r1 {
                    nodes.push(QuadNode { chart: chart.id, coords: [c0, c1], weight: w0 * w1 });
                }
            }
        }
        QuadratureRule { nodes, order: n }
    }
}

/// A quadrature node with its geometry and effective weight `w Ψ √J`.
#[derive(Clone, Copy, Debug)]
pub struct Sample {
    pub node: QuadNode,
    pub weight: f64,
    pub pou: f64,
    pub metric: MetricState,
}

/// Geometry at every node of a rule; nodes with zero weight are dropped.
pub fn samples(atlas: &ChartAtlas, rule: &QuadratureRule, t: f64) -> Result<Vec<Sample>> {
    let mut out = Vec::with_capacity(rule.nodes.len());
    for node in &rule.nodes {
        let chart = &atlas.charts[node.chart];
        let pou = chart.pou_at(node.coords);
        if pou == 0.0 {
            continue;
        }
        let metric = metric_at(chart, node.coords, t)?;
        out.push(Sample { node: *node, weight: node.weight * pou * metric.jacobian.sqrt(), pou, metric });
    }
    Ok(out)
}

/// `∫ f dH²` at time `t`.
pub fn integrate(
    field: &crate::field::ScalarField,
    atlas: &ChartAtlas,
    rule: &QuadratureRule,
    t: f64,
) -> Result<f64> {
    Ok(samples(atlas, rule, t)?.iter().map(|s| s.weight * field.value(&s.metric.x, t)).sum())
}

/// `∫ n dH²` at time `t`; zero on a closed surface.
pub fn normal_integral(atlas: &ChartAtlas, rule: &QuadratureRule, t: f64) -> Result<V3<f64>> {
    let mut acc = [0.0; 3];
    for s in samples(atlas, rule, t)? {
        for i in 0..3 {
            acc[i] += s.weight * s.metric.normal[i];
        }
    }
    Ok(acc)
}

/// `max_ij |P_ij − Σ_αβ (g_α)_i (g_β)_j g^αβ|`.
pub fn projection_identity_residual(m: &MetricState) -> f64 {
    let g = &m.tangents;
    let mut worst = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            let mut s = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    s += g[a][i] * g[b][j] * m.inverse_gram[a][b];
                }
            }
            worst = worst.max((m.projection[i][j] - s).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(7);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert!((s - 2.0 / 13.0).abs() < 1e-15);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn smoothstep_endpoints_and_symmetry() {
        for k in [1, 3, 6] {
            assert_eq!(smoothstep(0.0, k), 0.0);
            assert_eq!(smoothstep(1.0, k), 1.0);
            for u in [0.1, 0.3, 0.45] {
                assert!((smoothstep(u, k) + smoothstep(1.0 - u, k) - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn flat_chart_metric() {
        let atlas = ChartAtlas::plane();
        let m = metric_at(&atlas.charts[0], [0.3, -0.2], 0.0).unwrap();
        assert_eq!(m.gram, [[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(m.jacobian, 1.0);
        assert_eq!(m.normal, [0.0, 0.0, 1.0]);
        assert_eq!(m.projection, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]]);
        assert_eq!(m.mean_curvature, 0.0);
    }

    #[test]
    fn equator_metric_is_identity() {
        let atlas = ChartAtlas::sphere(1.0);
        let m = metric_at(&atlas.charts[0], [PI / 2.0, 0.4], 0.0).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                assert!((m.gram[a][b] - if a == b { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
        assert!((m.jacobian - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pole_is_singular_and_outside_is_rejected() {
        let atlas = ChartAtlas::sphere(1.0);
        assert!(matches!(metric_at(&atlas.charts[0], [1e-9, 0.0], 0.0), Err(Error::SingularMetric { .. })));
        assert!(matches!(metric_at(&atlas.charts[0], [-0.1, 0.0], 0.0), Err(Error::OutOfDomain { .. })));
        // periodic direction wraps
        assert!(metric_at(&atlas.charts[0], [1.0, 9.0], 0.0).is_ok());
    }

    #[test]
    fn locate_inverts_the_parametrization() {
        for atlas in [ChartAtlas::sphere(1.3), ChartAtlas::torus(2.0, 0.5)] {
            for chart in &atlas.charts {
                let c = [1.1, 4.0];
                let back = chart.locate(&chart.position(c)).unwrap();
                assert!((back[0] - c[0]).abs() < 1e-12 && (back[1] - c[1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn finite_difference_jet_matches_analytic() {
        let atlas = ChartAtlas::torus(2.0, 0.5);
        let fd = atlas.clone().with_derivs(GeomDerivs::FiniteDifference);
        let c = [0.7, 2.1];
        let (a, b) = (atlas.charts[0].jet(c).unwrap(), fd.charts[0].jet(c).unwrap());
        for al in 0..2 {
            for i in 0..3 {
                assert!((a.d1[al][i] - b.d1[al][i]).abs() < 1e-9);
                for be in 0..2 {
                    assert!((a.d2[al][be][i] - b.d2[al][be][i]).abs() < 1e-7);
                }
            }
        }
    }

    #[test]
    fn sphere_and_torus_areas() {
        let one = crate::field::ScalarField::constant(1.0);
        for n in [16, 24, 32] {
            let atlas = ChartAtlas::sphere(1.0);
            let a = integrate(&one, &atlas, &QuadratureRule::gauss(&atlas, n), 0.0).unwrap();
            eprintln!("sphere n={n} err={:e}", a - 4.0 * PI);
            let atlas = ChartAtlas::torus(2.0, 0.5);
            let a = integrate(&one, &atlas, &QuadratureRule::gauss(&atlas, n), 0.0).unwrap();
            eprintln!("torus n={n} err={:e}", a - 4.0 * PI * PI);
        }
        let atlas = ChartAtlas::sphere(1.0);
        let a = integrate(&one, &atlas, &QuadratureRule::gauss(&atlas, 32), 0.0).unwrap();
        assert!((a / (4.0 * PI) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn projection_identity_and_normal_integral() {
        for atlas in [ChartAtlas::sphere(1.0), ChartAtlas::torus(2.0, 0.5)] {
            let m = metric_at(&atlas.charts[0], [1.2, 0.4], 0.0).unwrap();
            assert!(projection_identity_residual(&m) < 1e-14);
            let n = normal_integral(&atlas, &QuadratureRule::gauss(&atlas, 32), 0.0).unwrap();
            assert!(norm(&n) < 1e-7, "{n:?}");
        }
    }

    #[test]
    fn sphere_mean_curvature_and_orientation() {
        let atlas = ChartAtlas::sphere(2.0);
        atlas.check_orientation().unwrap();
        ChartAtlas::torus(2.0, 0.5).check_orientation().unwrap();
        for chart in &atlas.charts {
            let h = mean_curvature_at(chart, [0.9, 2.0], 0.0).unwrap();
            assert!((h + 1.0).abs() < 1e-13, "{h}");
        }
    }
}
