//! Method-of-lines solvers on the sphere covered by two overlapping
//! latitude-longitude grids.
//!
//! Each chart carries a uniform grid on a latitude band that reaches a few
//! cells past the region where the chart's own weight is positive. Nodes
//! with zero weight hold values interpolated from the other chart by
//! sixth-order tensor Lagrange interpolation. The scalar solvers treat the
//! grids as overset: each chart evolves its own overlap nodes and only the
//! holders are refreshed at every Runge-Kutta stage. The barotropic solver
//! also replaces overlap nodes by weight-blended averages of both charts
//! at every stage. Integrals weight each chart by its partition of unity.
//! Spatial derivatives are fourth-order
//! central differences in chart coordinates; the Laplace-Beltrami operator
//! uses the expanded form `a g^{αβ}∂_αβ + a b^β ∂_β + g^{αβ} ∂_α a ∂_β` with
//! `b^β = (1/√J) ∂_α(√J g^{αβ})` taken from the chart jet.

use std::borrow::Cow;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolving::{MotionKind, MotionLaw};
use crate::field::ScalarField;
use crate::geometry::{Blend, Chart, ChartAtlas, ChartJet, STENCIL};
use crate::laws::{FluxLaw, PressureLaw};
use crate::linalg::*;

/// Stability limit of classical RK4 on the negative real axis.
pub const RK4_REAL_LIMIT: f64 = 2.785;
/// Stability limit of classical RK4 on the imaginary axis.
pub const RK4_IMAG_LIMIT: f64 = 2.828;
/// Largest eigenvalue magnitude of the fourth-order second difference, times `h²`.
const D2_SYMBOL: f64 = 16.0 / 3.0;
/// Largest symbol magnitude of the fourth-order first difference, times `h`.
const D1_SYMBOL: f64 = 1.372;
const SAFETY: f64 = 0.9;

/// Rows of holder nodes past the active band.
const MARGIN: f64 = 4.5;
/// Points per direction of the tensor Lagrange interpolation between charts.
const INTERP_POINTS: usize = 6;

#[derive(Clone, Copy, Debug)]
struct Interp {
    rows: [usize; INTERP_POINTS],
    cols: [usize; INTERP_POINTS],
    w: [[f64; INTERP_POINTS]; INTERP_POINTS],
}

/// Geometry of one grid node.
#[derive(Clone, Copy, Debug)]
pub struct NodeGeom {
    pub x: V3<f64>,
    pub n: V3<f64>,
    pub sqrt_j: f64,
    pub ginv: [[f64; 2]; 2],
    /// `(1/√J) ∂_α(√J g^{αβ})`
    pub b: [f64; 2],
    /// Dual basis vectors `g^α`.
    pub gup: [V3<f64>; 2],
}

impl NodeGeom {
    pub fn from_jet(jet: &ChartJet) -> NodeGeom {
        let (g1, g2) = (&jet.d1, &jet.d2);
        let gram = [[dot(&g1[0], &g1[0]), dot(&g1[0], &g1[1])], [dot(&g1[1], &g1[0]), dot(&g1[1], &g1[1])]];
        let j = gram[0][0] * gram[1][1] - gram[0][1] * gram[1][0];
        let gi = [[gram[1][1] / j, -gram[0][1] / j], [-gram[1][0] / j, gram[0][0] / j]];
        // ∂_γ g_αβ
        let dg: [[[f64; 2]; 2]; 2] = std::array::from_fn(|c| {
            std::array::from_fn(|a| std::array::from_fn(|b| dot(&g2[c][a], &g1[b]) + dot(&g1[a], &g2[c][b])))
        });
        let dlog: [f64; 2] = std::array::from_fn(|c| {
            0.5 * (0..2).flat_map(|m| (0..2).map(move |n| (m, n))).map(|(m, n)| gi[m][n] * dg[c][m][n]).sum::<f64>()
        });
        // ∂_γ g^{αβ} = −g^{αμ} ∂_γ g_{μν} g^{νβ}
        let dgi = |c: usize, a: usize, b: usize| -> f64 {
            let mut s = 0.0;
            for m in 0..2 {
                for n in 0..2 {
                    s -= gi[a][m] * dg[c][m][n] * gi[n][b];
                }
            }
            s
        };
        let b = std::array::from_fn(|be| (0..2).map(|al| dgi(al, al, be) + gi[al][be] * dlog[al]).sum());
        let gup: [V3<f64>; 2] = std::array::from_fn(|a| std::array::from_fn(|i| gi[a][0] * g1[0][i] + gi[a][1] * g1[1][i]));
        let c = cross(&g1[0], &g1[1]);
        let len = norm(&c);
        NodeGeom { x: jet.x, n: c.map(|v| v / len), sqrt_j: j.sqrt(), ginv: gi, b, gup }
    }
}

/// Two overlapping latitude-longitude grids of a sphere.
#[derive(Clone, Debug)]
pub struct SphereGrid {
    pub radius: f64,
    /// Nodes in latitude and longitude.
    pub n: [usize; 2],
    /// Colatitude of the first row.
    pub lo: f64,
    pub h: [f64; 2],
    pub charts: Vec<Chart>,
    /// Own partition-of-unity weight of each node.
    pub pou: [Vec<f64>; 2],
    /// Geometry of the grid at `t = 0`.
    pub geom0: [Vec<NodeGeom>; 2],
    interp: [Vec<Option<Interp>>; 2],
}

/// Lagrange weights at offset `r` for nodes `−2, …, 3`.
fn lagrange(r: f64) -> [f64; INTERP_POINTS] {
    let node = |m: usize| m as f64 - 2.0;
    std::array::from_fn(|m| {
        (0..INTERP_POINTS).filter(|&l| l != m).map(|l| (r - node(l)) / (node(m) - node(l))).product()
    })
}

impl SphereGrid {
    /// `n` latitude rows and `2n` longitude columns per chart.
    pub fn new(radius: f64, n: usize) -> Result<SphereGrid> {
        if n < 24 {
            return Err(Error::Invalid(format!("grid resolution {n} is below the minimum of 24")));
        }
        let blend = Blend::SOLVER;
        let atlas = ChartAtlas::sphere_with(radius, blend);
        let edge = blend.inner.asin();
        let m = (n - 1) as f64;
        let lo = (edge - MARGIN * std::f64::consts::PI / m) / (1.0 - 2.0 * MARGIN / m);
        let h = [(std::f64::consts::PI - 2.0 * lo) / m, 2.0 * std::f64::consts::PI / (2 * n) as f64];
        let mut grid = SphereGrid {
            radius,
            n: [n, 2 * n],
            lo,
            h,
            charts: atlas.charts,
            pou: [vec![], vec![]],
            geom0: [vec![], vec![]],
            interp: [vec![], vec![]],
        };
        for c in 0..2 {
            let mut pou = Vec::with_capacity(grid.len());
            let mut geom = Vec::with_capacity(grid.len());
            for k in 0..grid.len() {
                let x = grid.coords(k);
                pou.push(grid.charts[c].pou_at(x));
                geom.push(NodeGeom::from_jet(&grid.charts[c].jet(x)?));
            }
            grid.pou[c] = pou;
            grid.geom0[c] = geom;
        }
        for c in 0..2 {
            let other = 1 - c;
            let mut plans = Vec::with_capacity(grid.len());
            for k in 0..grid.len() {
                if grid.pou[c][k] == 1.0 {
                    plans.push(None);
                    continue;
                }
                let x = grid.charts[c].position(grid.coords(k));
                let u = grid.charts[other].locate(&x).expect("sphere charts are invertible");
                plans.push(Some(grid.plan(u)?));
            }
            grid.interp[c] = plans;
        }
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    /// Largest parameter spacing, the mesh size used for convergence orders.
    pub fn spacing(&self) -> f64 {
        self.h[0].max(self.h[1])
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coords(&self, k: usize) -> [f64; 2] {
        let (i, j) = (k / self.n[1], k % self.n[1]);
        [self.lo + i as f64 * self.h[0], j as f64 * self.h[1]]
    }

    fn plan(&self, u: [f64; 2]) -> Result<Interp> {
        let s = (u[0] - self.lo) / self.h[0];
        let i0 = s.floor() as isize;
        if i0 < 2 || i0 + 3 >= self.n[0] as isize {
            return Err(Error::Invalid(format!("interpolation point at colatitude {:.4} leaves the grid band", u[0])));
        }
        let q = u[1] / self.h[1];
        let j0 = q.floor() as isize;
        let (wr, wc) = (lagrange(s - i0 as f64), lagrange(q - j0 as f64));
        let nc = self.n[1] as isize;
        Ok(Interp {
            rows: std::array::from_fn(|a| (i0 - 2 + a as isize) as usize),
            cols: std::array::from_fn(|b| (j0 - 2 + b as isize).rem_euclid(nc) as usize),
            w: std::array::from_fn(|a| std::array::from_fn(|b| wr[a] * wc[b])),
        })
    }

    fn eval_plan(&self, p: &Interp, f: &[f64]) -> f64 {
        let mut s = 0.0;
        for a in 0..INTERP_POINTS {
            for b in 0..INTERP_POINTS {
                s += p.w[a][b] * f[p.rows[a] * self.n[1] + p.cols[b]];
            }
        }
        s
    }

    /// Interpolates every holder node from the other chart, then replaces
    /// overlap nodes by weight-blended averages of both charts.
    pub fn blend(&self, f: &mut [Vec<f64>; 2]) {
        self.fill(f);
        let snapshot = f.clone();
        for c in 0..2 {
            for k in 0..self.len() {
                let w = self.pou[c][k];
                if w > 0.0 && w < 1.0 {
                    let p = self.interp[c][k].as_ref().expect("overlap node has a plan");
                    f[c][k] = w * snapshot[c][k] + (1.0 - w) * self.eval_plan(p, &snapshot[1 - c]);
                }
            }
        }
    }

    /// Interpolates every holder node from the other chart.
    pub fn fill(&self, f: &mut [Vec<f64>; 2]) {
        for c in 0..2 {
            for k in 0..self.len() {
                if self.pou[c][k] == 0.0 {
                    let p = self.interp[c][k].as_ref().expect("holder has a plan");
                    f[c][k] = self.eval_plan(p, &f[1 - c]);
                }
            }
        }
    }

    /// Blend of a vector-valued nodal field, componentwise.
    pub fn blend_vec(&self, f: &mut [Vec<V3<f64>>; 2]) {
        self.componentwise(f, Self::blend);
    }

    /// Holder fill of a vector-valued nodal field, componentwise.
    pub fn fill_vec(&self, f: &mut [Vec<V3<f64>>; 2]) {
        self.componentwise(f, Self::fill);
    }

    fn componentwise(&self, f: &mut [Vec<V3<f64>>; 2], op: fn(&Self, &mut [Vec<f64>; 2])) {
        for i in 0..3 {
            let mut comp = [f[0].iter().map(|v| v[i]).collect(), f[1].iter().map(|v| v[i]).collect()];
            op(self, &mut comp);
            for c in 0..2 {
                for (v, s) in f[c].iter_mut().zip(&comp[c]) {
                    v[i] = *s;
                }
            }
        }
    }

    /// `∫ f dH²` from nodal values on both charts.
    pub fn integrate(&self, geom: &[Vec<NodeGeom>; 2], f: &[Vec<f64>; 2]) -> f64 {
        let mut s = 0.0;
        for c in 0..2 {
            for k in 0..self.len() {
                if self.pou[c][k] > 0.0 {
                    s += self.pou[c][k] * geom[c][k].sqrt_j * f[c][k];
                }
            }
        }
        s * self.h[0] * self.h[1]
    }

    /// Nodal values of a field on both charts.
    pub fn sample(&self, geom: &[Vec<NodeGeom>; 2], f: &ScalarField, t: f64) -> [Vec<f64>; 2] {
        std::array::from_fn(|c| geom[c].iter().map(|g| f.value(&g.x, t)).collect())
    }

    fn stencils(&self) -> [Vec<[V3<f64>; 17]>; 2] {
        std::array::from_fn(|c| {
            let chart = &self.charts[c];
            let h = chart.fd_steps();
            (0..self.len())
                .map(|k| {
                    let u = self.coords(k);
                    STENCIL.map(|o| chart.position([u[0] + o[0] * h[0], u[1] + o[1] * h[1]]))
                })
                .collect()
        })
    }

    /// Node geometry from material stencils, or the initial geometry when
    /// there are none.
    fn geometry_of(&self, st: &[Vec<[V3<f64>; 17]>; 2]) -> Cow<'_, [Vec<NodeGeom>; 2]> {
        if st[0].is_empty() {
            return Cow::Borrowed(&self.geom0);
        }
        Cow::Owned(per_chart(|c| {
            let h = self.charts[c].fd_steps();
            st[c].iter().map(|p| NodeGeom::from_jet(&ChartJet::from_stencil(p, h))).collect()
        }))
    }

    fn active(&self, c: usize, k: usize) -> bool {
        self.pou[c][k] > 0.0
    }
}

/// Runs `f` for both charts on separate threads.
fn per_chart<T: Send>(f: impl Fn(usize) -> T + Sync) -> [T; 2] {
    std::thread::scope(|s| {
        let h = s.spawn(|| f(1));
        let a = f(0);
        [a, h.join().expect("chart worker panicked")]
    })
}

/// Fourth-order chart derivatives of a nodal array at `(i, j)`.
struct Diff<'a> {
    f: &'a [f64],
    n: [usize; 2],
    h: [f64; 2],
}

impl Diff<'_> {
    fn at(&self, i: isize, j: isize) -> f64 {
        let nc = self.n[1] as isize;
        self.f[i as usize * self.n[1] + j.rem_euclid(nc) as usize]
    }

    fn d1(&self, i: usize, j: usize) -> [f64; 2] {
        let (i, j) = (i as isize, j as isize);
        let g = |a: f64, b: f64, c: f64, d: f64, h: f64| (8.0 * (a - b) - (c - d)) / (12.0 * h);
        [
            g(self.at(i + 1, j), self.at(i - 1, j), self.at(i + 2, j), self.at(i - 2, j), self.h[0]),
            g(self.at(i, j + 1), self.at(i, j - 1), self.at(i, j + 2), self.at(i, j - 2), self.h[1]),
        ]
    }

    fn d2(&self, i: usize, j: usize) -> [[f64; 2]; 2] {
        let (i, j) = (i as isize, j as isize);
        let c = self.at(i, j);
        let pure = |p1: f64, m1: f64, p2: f64, m2: f64, h: f64| (-p2 + 16.0 * p1 - 30.0 * c + 16.0 * m1 - m2) / (12.0 * h * h);
        let dtt = pure(self.at(i + 1, j), self.at(i - 1, j), self.at(i + 2, j), self.at(i - 2, j), self.h[0]);
        let dpp = pure(self.at(i, j + 1), self.at(i, j - 1), self.at(i, j + 2), self.at(i, j - 2), self.h[1]);
        const W: [(isize, f64); 4] = [(1, 8.0), (-1, -8.0), (2, -1.0), (-2, 1.0)];
        let mut dtp = 0.0;
        for (a, wa) in W {
            for (b, wb) in W {
                dtp += wa * wb * self.at(i + a, j + b);
            }
        }
        dtp /= 144.0 * self.h[0] * self.h[1];
        [[dtt, dtp], [dtp, dpp]]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ScalarKind {
    /// `ρ D_t(C_θ θ) = div_Γ q + ρ Q_θ + ℱ₁`
    Heat,
    /// `D_t C + (div_Γ v) C = div_Γ q + Q_C + ℱ₂`
    Diffusion,
}

/// Data of a scalar problem on a possibly moving sphere.
#[derive(Clone, Debug)]
pub struct ScalarProblem {
    pub kind: ScalarKind,
    pub flux: FluxLaw,
    pub motion: MotionLaw,
    /// Initial density `ρ₀`; the density follows the flow exactly.
    pub rho0: ScalarField,
    pub c_theta: ScalarField,
    pub source: ScalarField,
    pub forcing: ScalarField,
}

impl ScalarProblem {
    pub fn heat(flux: FluxLaw) -> Self {
        ScalarProblem {
            kind: ScalarKind::Heat,
            flux,
            motion: MotionLaw::fixed(),
            rho0: ScalarField::constant(1.0),
            c_theta: ScalarField::constant(1.0),
            source: ScalarField::constant(0.0),
            forcing: ScalarField::constant(0.0),
        }
    }

    pub fn diffusion(flux: FluxLaw) -> Self {
        ScalarProblem { kind: ScalarKind::Diffusion, ..Self::heat(flux) }
    }

    fn moving(&self) -> bool {
        self.motion.kind != MotionKind::Static
    }
}

/// Nodal values of `θ` or `C` on both charts, with the material stencils of
/// the grid nodes.
#[derive(Clone, Debug)]
pub struct GridField {
    pub t: f64,
    pub values: [Vec<f64>; 2],
    /// Material stencils of the nodes; empty on a static surface.
    pub stencils: [Vec<[V3<f64>; 17]>; 2],
    /// `ρ₀(x̃(X,0)) √J(X,0)` at every node.
    rho_ref: [Vec<f64>; 2],
}

impl GridField {
    pub fn new(grid: &SphereGrid, problem: &ScalarProblem, f0: &ScalarField, t0: f64) -> GridField {
        let stencils = if problem.moving() { grid.stencils() } else { [vec![], vec![]] };
        let geom = grid.geometry_of(&stencils);
        let rho0 = &problem.rho0;
        let mut values = grid.sample(&geom, f0, t0);
        grid.blend(&mut values);
        let rho_ref = std::array::from_fn(|c| geom[c].iter().map(|g| rho0.value(&g.x, t0) * g.sqrt_j).collect());
        GridField { t: t0, values, stencils, rho_ref }
    }

    pub fn geometry<'a>(&self, grid: &'a SphereGrid) -> Cow<'a, [Vec<NodeGeom>; 2]> {
        grid.geometry_of(&self.stencils)
    }

    /// `∫ f dH²` of the field on the current surface.
    pub fn integral(&self, grid: &SphereGrid) -> f64 {
        grid.integrate(&self.geometry(grid), &self.values)
    }

    /// Largest nodal deviation from `exact` over active nodes, relative to
    /// the largest `|exact|`.
    pub fn relative_error(&self, grid: &SphereGrid, exact: &ScalarField) -> f64 {
        let geom = self.geometry(grid);
        let (mut err, mut scale) = (0.0f64, 0.0f64);
        for c in 0..2 {
            for k in 0..grid.len() {
                if grid.active(c, k) {
                    let e = exact.value(&geom[c][k].x, self.t);
                    err = err.max((self.values[c][k] - e).abs());
                    scale = scale.max(e.abs());
                }
            }
        }
        err / scale.max(f64::MIN_POSITIVE)
    }
}

fn density(field_ref: &[Vec<f64>; 2], geom: &[Vec<NodeGeom>; 2]) -> [Vec<f64>; 2] {
    std::array::from_fn(|c| field_ref[c].iter().zip(&geom[c]).map(|(r, g)| r / g.sqrt_j).collect())
}

/// Diffusivity `a = e_J′(ζ)` and the effective coefficient `e_J′ + 2ζ e_J″`
/// of the linearized operator, at every node where a centred stencil fits.
fn flux_coefficients(grid: &SphereGrid, geom: &[NodeGeom], f: &[f64], flux: &FluxLaw) -> (Vec<f64>, Vec<f64>) {
    let d = Diff { f, n: grid.n, h: grid.h };
    let mut a = vec![0.0; grid.len()];
    let mut eff = vec![0.0; grid.len()];
    for k in 0..grid.len() {
        let i = k / grid.n[1];
        if i < 2 || i + 2 >= grid.n[0] {
            continue;
        }
        let g = d.d1(i, k % grid.n[1]);
        let gi = &geom[k].ginv;
        let z = gi[0][0] * g[0] * g[0] + 2.0 * gi[0][1] * g[0] * g[1] + gi[1][1] * g[1] * g[1];
        a[k] = flux.de(z);
        eff[k] = a[k] + 2.0 * z * flux.d2e(z);
    }
    (a, eff)
}

fn divergence_flux(grid: &SphereGrid, geom: &[NodeGeom], f: &[f64], a: &[f64], linear: bool, k: usize) -> f64 {
    let (i, j) = (k / grid.n[1], k % grid.n[1]);
    let d = Diff { f, n: grid.n, h: grid.h };
    let (g1, g2) = (d.d1(i, j), d.d2(i, j));
    let g = &geom[k];
    let mut lap = 0.0;
    for al in 0..2 {
        lap += g.b[al] * g1[al];
        for be in 0..2 {
            lap += g.ginv[al][be] * g2[al][be];
        }
    }
    let mut out = a[k] * lap;
    if !linear {
        let da = Diff { f: a, n: grid.n, h: grid.h }.d1(i, j);
        for al in 0..2 {
            for be in 0..2 {
                out += g.ginv[al][be] * da[al] * g1[be];
            }
        }
    }
    out
}

/// Largest stable step of the explicit scheme for the current state.
pub fn scalar_stability_bound(grid: &SphereGrid, field: &GridField, problem: &ScalarProblem) -> f64 {
    let geom = field.geometry(grid);
    let rho = density(&field.rho_ref, &geom);
    let mut worst = 0.0f64;
    for c in 0..2 {
        let (_, eff) = flux_coefficients(grid, &geom[c], &field.values[c], &problem.flux);
        for k in 0..grid.len() {
            if !grid.active(c, k) {
                continue;
            }
            let g = &geom[c][k];
            let mut coef = eff[k];
            if problem.kind == ScalarKind::Heat {
                coef /= rho[c][k] * problem.c_theta.value(&g.x, field.t);
            }
            let s = g.ginv[0][0] / (grid.h[0] * grid.h[0]) + g.ginv[1][1] / (grid.h[1] * grid.h[1]);
            worst = worst.max(coef.abs() * s);
        }
    }
    SAFETY * RK4_REAL_LIMIT / D2_SYMBOL / worst.max(f64::MIN_POSITIVE)
}

struct Stage {
    values: [Vec<f64>; 2],
    stencils: [Vec<[V3<f64>; 17]>; 2],
}

/// Time derivative of the evolved variable (`C_θ θ` or `C √J`) and of the
/// stencil points at a stage. Holder values are filled in place.
fn scalar_rates(
    grid: &SphereGrid,
    rho_ref: &[Vec<f64>; 2],
    problem: &ScalarProblem,
    t: f64,
    stage: &mut Stage,
) -> Result<Stage> {
    let geom = grid.geometry_of(&stage.stencils);
    // evolved → physical, refresh the holders
    let heat = problem.kind == ScalarKind::Heat;
    let mut phys: [Vec<f64>; 2] = std::array::from_fn(|c| {
        stage.values[c]
            .iter()
            .zip(&geom[c])
            .map(|(w, g)| if heat { w / problem.c_theta.value(&g.x, t) } else { w / g.sqrt_j })
            .collect()
    });
    grid.fill(&mut phys);
    let rho = density(rho_ref, &geom);
    let [r0, r1] = per_chart(|c| -> Result<Vec<f64>> {
        let mut rates = vec![0.0; grid.len()];
        let (a, _) = if problem.flux.is_linear() {
            (vec![problem.flux.de(0.0); grid.len()], vec![])
        } else {
            flux_coefficients(grid, &geom[c], &phys[c], &problem.flux)
        };
        for k in 0..grid.len() {
            if !grid.active(c, k) {
                continue;
            }
            let g = &geom[c][k];
            let div_q = divergence_flux(grid, &geom[c], &phys[c], &a, problem.flux.is_linear(), k);
            let (q, f) = (problem.source.value(&g.x, t), problem.forcing.value(&g.x, t));
            rates[k] = if heat {
                let r = rho[c][k];
                if !(r > 0.0) {
                    return Err(Error::NonpositiveDensity { value: r });
                }
                (div_q + r * q + f) / r
            } else {
                (div_q + q + f) * g.sqrt_j
            };
        }
        Ok(rates)
    });
    let rates = [r0?, r1?];
    // the stage state keeps the refreshed holders
    for c in 0..2 {
        for k in 0..grid.len() {
            let g = &geom[c][k];
            stage.values[c][k] = if heat { phys[c][k] * problem.c_theta.value(&g.x, t) } else { phys[c][k] * g.sqrt_j };
        }
    }
    let v = &problem.motion.velocity;
    let moves: [Vec<[V3<f64>; 17]>; 2] = if problem.moving() {
        std::array::from_fn(|c| stage.stencils[c].iter().map(|s| s.map(|p| v.value(&p, t))).collect())
    } else {
        [vec![], vec![]]
    };
    Ok(Stage { values: rates, stencils: moves })
}

fn axpy(base: &Stage, k: &Stage, s: f64, moving: bool) -> Stage {
    let values = std::array::from_fn(|c| base.values[c].iter().zip(&k.values[c]).map(|(y, d)| y + s * d).collect());
    let stencils = if moving {
        std::array::from_fn(|c| {
            base.stencils[c]
                .iter()
                .zip(&k.stencils[c])
                .map(|(p, d)| std::array::from_fn(|m| std::array::from_fn(|i| p[m][i] + s * d[m][i])))
                .collect()
        })
    } else {
        base.stencils.clone()
    };
    Stage { values, stencils }
}

fn step_scalar(grid: &SphereGrid, field: &GridField, problem: &ScalarProblem, dt: f64) -> Result<GridField> {
    let bound = scalar_stability_bound(grid, field, problem);
    if !(dt > 0.0) || dt > bound {
        return Err(Error::StabilityViolation { dt, bound });
    }
    let geom = field.geometry(grid);
    let heat = problem.kind == ScalarKind::Heat;
    let t = field.t;
    let to_evolved = |vals: &[Vec<f64>; 2]| -> [Vec<f64>; 2] {
        std::array::from_fn(|c| {
            vals[c]
                .iter()
                .zip(&geom[c])
                .map(|(v, g)| if heat { v * problem.c_theta.value(&g.x, t) } else { v * g.sqrt_j })
                .collect()
        })
    };
    let moving = problem.moving();
    let mut y0 = Stage { values: to_evolved(&field.values), stencils: field.stencils.clone() };
    let k1 = scalar_rates(grid, &field.rho_ref, problem, t, &mut y0)?;
    let mut y1 = axpy(&y0, &k1, 0.5 * dt, moving);
    let k2 = scalar_rates(grid, &field.rho_ref, problem, t + 0.5 * dt, &mut y1)?;
    let mut y2 = axpy(&y0, &k2, 0.5 * dt, moving);
    let k3 = scalar_rates(grid, &field.rho_ref, problem, t + 0.5 * dt, &mut y2)?;
    let mut y3 = axpy(&y0, &k3, dt, moving);
    let k4 = scalar_rates(grid, &field.rho_ref, problem, t + dt, &mut y3)?;
    let mut sum = axpy(&y0, &k1, dt / 6.0, moving);
    for (k, w) in [(&k2, dt / 3.0), (&k3, dt / 3.0), (&k4, dt / 6.0)] {
        sum = axpy(&sum, k, w, moving);
    }
    let t1 = t + dt;
    let geom1 = grid.geometry_of(&sum.stencils);
    let mut values: [Vec<f64>; 2] = std::array::from_fn(|c| {
        sum.values[c]
            .iter()
            .zip(&geom1[c])
            .map(|(w, g)| if heat { w / problem.c_theta.value(&g.x, t1) } else { w / g.sqrt_j })
            .collect()
    });
    grid.fill(&mut values);
    if values.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Invalid(format!("non-finite value after step at t = {t1}")));
    }
    Ok(GridField { t: t1, values, stencils: sum.stencils, rho_ref: field.rho_ref.clone() })
}

/// One RK4 step of the generalized heat equation in reference coordinates.
pub fn step_heat(grid: &SphereGrid, field: &GridField, problem: &ScalarProblem, dt: f64) -> Result<GridField> {
    if problem.kind != ScalarKind::Heat {
        return Err(Error::Invalid("step_heat needs a heat problem".into()));
    }
    step_scalar(grid, field, problem, dt)
}

/// One RK4 step of the generalized diffusion equation, evolving `C √J`.
pub fn step_diffusion(grid: &SphereGrid, field: &GridField, problem: &ScalarProblem, dt: f64) -> Result<GridField> {
    if problem.kind != ScalarKind::Diffusion {
        return Err(Error::Invalid("step_diffusion needs a diffusion problem".into()));
    }
    step_scalar(grid, field, problem, dt)
}

/// Integrates a scalar problem to `t_end` with `steps` equal steps, calling
/// `observe` after each step.
pub fn run_scalar(
    grid: &SphereGrid,
    mut field: GridField,
    problem: &ScalarProblem,
    t_end: f64,
    steps: usize,
    mut observe: impl FnMut(&GridField),
) -> Result<GridField> {
    let dt = (t_end - field.t) / steps as f64;
    for _ in 0..steps {
        field = step_scalar(grid, &field, problem, dt)?;
        observe(&field);
    }
    Ok(field)
}

/// Density and tangential velocity on the static sphere.
#[derive(Clone, Debug)]
pub struct BarotropicField {
    pub t: f64,
    pub rho: [Vec<f64>; 2],
    pub v: [Vec<V3<f64>>; 2],
}

fn project(v: &V3<f64>, n: &V3<f64>) -> V3<f64> {
    let s = dot(v, n);
    std::array::from_fn(|i| v[i] - s * n[i])
}

impl BarotropicField {
    pub fn new(grid: &SphereGrid, rho0: &ScalarField, v0: &crate::field::VectorField) -> BarotropicField {
        let mut rho = grid.sample(&grid.geom0, rho0, 0.0);
        grid.blend(&mut rho);
        let mut v: [Vec<V3<f64>>; 2] =
            std::array::from_fn(|c| grid.geom0[c].iter().map(|g| project(&v0.value(&g.x, 0.0), &g.n)).collect());
        grid.blend_vec(&mut v);
        BarotropicField { t: 0.0, rho, v }
    }

    pub fn mass(&self, grid: &SphereGrid) -> f64 {
        grid.integrate(&grid.geom0, &self.rho)
    }

    /// `∫ ½ρ|v|² + s·p(ρ)` for `s = ±1`.
    pub fn energy(&self, grid: &SphereGrid, law: &PressureLaw, sign: f64) -> f64 {
        let e: [Vec<f64>; 2] = std::array::from_fn(|c| {
            self.rho[c].iter().zip(&self.v[c]).map(|(r, v)| 0.5 * r * dot(v, v) + sign * law.p(*r)).collect()
        });
        grid.integrate(&grid.geom0, &e)
    }

    /// `∫ x × ρv`.
    pub fn angular_momentum(&self, grid: &SphereGrid) -> V3<f64> {
        std::array::from_fn(|i| {
            let f: [Vec<f64>; 2] = std::array::from_fn(|c| {
                grid.geom0[c].iter().zip(&self.rho[c]).zip(&self.v[c]).map(|((g, r), v)| cross(&g.x, v)[i] * r).collect()
            });
            grid.integrate(&grid.geom0, &f)
        })
    }
}

/// Largest stable step from the advective speed plus the sound speed.
pub fn barotropic_stability_bound(grid: &SphereGrid, field: &BarotropicField, law: &PressureLaw) -> f64 {
    let mut worst = 0.0f64;
    for c in 0..2 {
        for k in 0..grid.len() {
            if !grid.active(c, k) {
                continue;
            }
            let g = &grid.geom0[c][k];
            let cs = law.effective_slope(field.rho[c][k]).max(0.0).sqrt();
            let mut s = 0.0;
            for a in 0..2 {
                s += (dot(&field.v[c][k], &g.gup[a]).abs() + cs * g.ginv[a][a].sqrt()) / grid.h[a];
            }
            worst = worst.max(s);
        }
    }
    SAFETY * RK4_IMAG_LIMIT / D1_SYMBOL / worst.max(f64::MIN_POSITIVE)
}

type BaroState = ([Vec<f64>; 2], [Vec<V3<f64>>; 2]);

fn barotropic_rates(grid: &SphereGrid, law: &PressureLaw, s: &mut BaroState) -> Result<BaroState> {
    grid.blend(&mut s.0);
    grid.blend_vec(&mut s.1);
    for c in 0..2 {
        for (v, g) in s.1[c].iter_mut().zip(&grid.geom0[c]) {
            *v = project(v, &g.n);
        }
    }
    let mut drho: [Vec<f64>; 2] = [vec![0.0; grid.len()], vec![0.0; grid.len()]];
    let mut dv: [Vec<V3<f64>>; 2] = [vec![[0.0; 3]; grid.len()], vec![[0.0; 3]; grid.len()]];
    for c in 0..2 {
        let (rho, v) = (&s.0[c], &s.1[c]);
        if let Some(r) = rho.iter().enumerate().find(|(k, r)| grid.active(c, *k) && !(**r > 0.0)) {
            return Err(Error::NonpositiveDensity { value: *r.1 });
        }
        let pe: Vec<f64> = rho.iter().map(|r| law.effective(*r)).collect();
        let comps: [Vec<f64>; 3] = std::array::from_fn(|i| v.iter().map(|x| x[i]).collect());
        let flux: [Vec<f64>; 3] = std::array::from_fn(|i| v.iter().zip(rho).map(|(x, r)| x[i] * r).collect());
        let d = |f: &[f64], k: usize| Diff { f, n: grid.n, h: grid.h }.d1(k / grid.n[1], k % grid.n[1]);
        for k in 0..grid.len() {
            if !grid.active(c, k) {
                continue;
            }
            let g = &grid.geom0[c][k];
            let dflux: [[f64; 2]; 3] = std::array::from_fn(|i| d(&flux[i], k));
            let dv_: [[f64; 2]; 3] = std::array::from_fn(|i| d(&comps[i], k));
            let dp = d(&pe, k);
            let mut div = 0.0;
            for a in 0..2 {
                for i in 0..3 {
                    div += g.gup[a][i] * dflux[i][a];
                }
            }
            let va = [dot(&v[k], &g.gup[0]), dot(&v[k], &g.gup[1])];
            let acc: V3<f64> = std::array::from_fn(|i| {
                let adv = va[0] * dv_[i][0] + va[1] * dv_[i][1];
                let grad = g.gup[0][i] * dp[0] + g.gup[1][i] * dp[1];
                -(adv + grad / rho[k])
            });
            drho[c][k] = -div;
            dv[c][k] = project(&acc, &g.n);
        }
    }
    Ok((drho, dv))
}

/// One RK4 step of the tangential barotropic system on the static sphere.
pub fn step_barotropic_tangential(
    grid: &SphereGrid,
    field: &BarotropicField,
    law: &PressureLaw,
    dt: f64,
) -> Result<BarotropicField> {
    let bound = barotropic_stability_bound(grid, field, law);
    if !(dt > 0.0) || dt > bound {
        return Err(Error::StabilityViolation { dt, bound });
    }
    let comb = |a: &BaroState, k: &BaroState, s: f64| -> BaroState {
        (
            std::array::from_fn(|c| a.0[c].iter().zip(&k.0[c]).map(|(x, d)| x + s * d).collect()),
            std::array::from_fn(|c| {
                a.1[c].iter().zip(&k.1[c]).map(|(x, d)| std::array::from_fn(|i| x[i] + s * d[i])).collect()
            }),
        )
    };
    let mut y0: BaroState = (field.rho.clone(), field.v.clone());
    let k1 = barotropic_rates(grid, law, &mut y0)?;
    let mut y1 = comb(&y0, &k1, 0.5 * dt);
    let k2 = barotropic_rates(grid, law, &mut y1)?;
    let mut y2 = comb(&y0, &k2, 0.5 * dt);
    let k3 = barotropic_rates(grid, law, &mut y2)?;
    let mut y3 = comb(&y0, &k3, dt);
    let k4 = barotropic_rates(grid, law, &mut y3)?;
    let mut y = comb(&y0, &k1, dt / 6.0);
    y = comb(&y, &k2, dt / 3.0);
    y = comb(&y, &k3, dt / 3.0);
    y = comb(&y, &k4, dt / 6.0);
    grid.fill(&mut y.0);
    grid.fill_vec(&mut y.1);
    for c in 0..2 {
        for (v, g) in y.1[c].iter_mut().zip(&grid.geom0[c]) {
            *v = project(v, &g.n);
        }
    }
    Ok(BarotropicField { t: field.t + dt, rho: y.0, v: y.1 })
}

/// Integrals tracked by the conservation laws, in the order mass, momentum
/// (3), total energy, concentration, angular momentum (3).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Tracked {
    pub t: f64,
    pub values: [f64; 9],
}

/// Names of the tracked groups with their slots in [`Tracked::values`].
pub const TRACKED_GROUPS: [(&str, std::ops::Range<usize>); 5] = [
    ("mass", 0..1),
    ("momentum", 1..4),
    ("energy", 4..5),
    ("concentration", 5..6),
    ("angular_momentum", 6..9),
];

/// Tracked integrals at one time, the integrals of their right-hand sides,
/// and the integrals of the absolute integrands used as drift scales.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct ConservationSample {
    pub integrals: Tracked,
    pub rates: [f64; 9],
    pub scales: [f64; 9],
}

/// Per-node contributions `(integrand, rate, |integrand|)`.
fn accumulate(out: &mut ConservationSample, slot: usize, w: f64, val: f64, rate: f64) {
    out.integrals.values[slot] += w * val;
    out.rates[slot] += w * rate;
    out.scales[slot] += w * val.abs();
}

/// Conserved integrals of a moving surface whose density solves the
/// continuity equation, with velocity from `motion` and specific energy `e`.
/// The concentration slot is left empty.
pub fn sample_flow(
    flow: &crate::evolving::FlowState,
    rho0: &ScalarField,
    motion: &MotionLaw,
    e: &ScalarField,
    force: &crate::field::VectorField,
    q_theta: &ScalarField,
) -> ConservationSample {
    let rho = crate::evolving::transport_scalar(flow, rho0, None);
    let t = flow.t;
    let mut out = ConservationSample { integrals: Tracked { t, values: [0.0; 9] }, ..Default::default() };
    for (node, r) in flow.nodes.iter().zip(rho) {
        let w = node.surface_weight();
        let x = node.x();
        let v = motion.velocity.value(&x, t);
        let f = force.value(&x, t);
        let l = cross(&x, &v);
        let tq = cross(&x, &f);
        accumulate(&mut out, 0, w, r, 0.0);
        for i in 0..3 {
            accumulate(&mut out, 1 + i, w, r * v[i], r * f[i]);
            accumulate(&mut out, 6 + i, w, r * l[i], r * tq[i]);
        }
        let ea = r * (0.5 * dot(&v, &v) + e.value(&x, t));
        accumulate(&mut out, 4, w, ea, r * (dot(&f, &v) + q_theta.value(&x, t)));
    }
    out
}

impl ConservationSample {
    /// Fills the concentration slot from a grid solution and its source.
    pub fn with_concentration(mut self, grid: &SphereGrid, field: &GridField, q_c: &ScalarField) -> Self {
        let geom = field.geometry(grid);
        let q = grid.sample(&geom, q_c, field.t);
        let abs: [Vec<f64>; 2] = std::array::from_fn(|c| field.values[c].iter().map(|v| v.abs()).collect());
        self.integrals.values[5] = grid.integrate(&geom, &field.values);
        self.rates[5] = grid.integrate(&geom, &q);
        self.scales[5] = grid.integrate(&geom, &abs);
        self
    }
}

/// Conserved integrals of the barotropic system; the energy density is
/// `½ρ|v|² + p(ρ)`.
pub fn sample_barotropic(grid: &SphereGrid, field: &BarotropicField, law: &PressureLaw) -> ConservationSample {
    let mut out = ConservationSample { integrals: Tracked { t: field.t, values: [0.0; 9] }, ..Default::default() };
    let cell = grid.h[0] * grid.h[1];
    for c in 0..2 {
        for k in 0..grid.len() {
            if !grid.active(c, k) {
                continue;
            }
            let g = &grid.geom0[c][k];
            let w = grid.pou[c][k] * g.sqrt_j * cell;
            let (r, v) = (field.rho[c][k], field.v[c][k]);
            let l = cross(&g.x, &v);
            accumulate(&mut out, 0, w, r, 0.0);
            for i in 0..3 {
                accumulate(&mut out, 1 + i, w, r * v[i], 0.0);
                accumulate(&mut out, 6 + i, w, r * l[i], 0.0);
            }
            accumulate(&mut out, 4, w, 0.5 * r * dot(&v, &v) + law.p(r), 0.0);
        }
    }
    out
}

/// Largest drift of each tracked group over the window.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct Drift {
    pub mass: f64,
    pub momentum: f64,
    pub energy: f64,
    pub concentration: f64,
    pub angular_momentum: f64,
}

impl Drift {
    pub fn entries(&self) -> [(&'static str, f64); 5] {
        [
            ("mass", self.mass),
            ("momentum", self.momentum),
            ("energy", self.energy),
            ("concentration", self.concentration),
            ("angular_momentum", self.angular_momentum),
        ]
    }

    pub fn max(&self) -> f64 {
        self.entries().iter().map(|e| e.1).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConservationReport {
    pub series: Vec<Tracked>,
    /// Accumulated right-hand sides, trapezoid rule in time.
    pub budget: Vec<[f64; 9]>,
    pub drift: Drift,
}

/// Drift of each integral from its initial value plus the time integral of
/// its right-hand side, relative to the initial integral of the absolute
/// integrand (largest over the group's components).
pub fn conservation_report(samples: &[ConservationSample]) -> ConservationReport {
    let mut budget = Vec::with_capacity(samples.len());
    let mut acc = [0.0; 9];
    for (m, s) in samples.iter().enumerate() {
        if m > 0 {
            let prev = &samples[m - 1];
            let dt = s.integrals.t - prev.integrals.t;
            for i in 0..9 {
                acc[i] += 0.5 * dt * (prev.rates[i] + s.rates[i]);
            }
        }
        budget.push(acc);
    }
    let mut drifts = [0.0; 5];
    if let Some(first) = samples.first() {
        for (g, (_, range)) in TRACKED_GROUPS.iter().enumerate() {
            let scale = range.clone().map(|i| first.scales[i]).fold(0.0, f64::max);
            let mut worst = 0.0f64;
            for (s, b) in samples.iter().zip(&budget) {
                for i in range.clone() {
                    worst = worst.max((s.integrals.values[i] - first.integrals.values[i] - b[i]).abs());
                }
            }
            drifts[g] = if scale > 0.0 { worst / scale } else { worst };
        }
    }
    ConservationReport {
        series: samples.iter().map(|s| s.integrals).collect(),
        budget,
        drift: Drift {
            mass: drifts[0],
            momentum: drifts[1],
            energy: drifts[2],
            concentration: drifts[3],
            angular_momentum: drifts[4],
        },
    }
}

/// Writes one chart's nodal values: header `chart id (u64), rows (u64),
/// columns (u64), t (f64)`, then the values row-major as little-endian f64.
pub fn write_dump(path: &Path, chart: usize, dims: [usize; 2], t: f64, values: &[f64]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(&(chart as u64).to_le_bytes())?;
    f.write_all(&(dims[0] as u64).to_le_bytes())?;
    f.write_all(&(dims[1] as u64).to_le_bytes())?;
    f.write_all(&t.to_le_bytes())?;
    for v in values {
        f.write_all(&v.to_le_bytes())?;
    }
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_geometry_matches_latitude_longitude_formulas() {
        let grid = SphereGrid::new(2.0, 24).unwrap();
        let k = 5 * grid.n[1] + 3;
        let th = grid.coords(k)[0];
        let g = &grid.geom0[0][k];
        assert!((g.ginv[0][0] - 0.25).abs() < 1e-14);
        assert!((g.ginv[1][1] - 0.25 / th.sin().powi(2)).abs() < 1e-13);
        assert!((g.b[0] - 0.25 * th.cos() / th.sin()).abs() < 1e-13);
        assert!(g.b[1].abs() < 1e-14);
        assert!((g.sqrt_j - 4.0 * th.sin()).abs() < 1e-13);
    }

    #[test]
    fn blending_reproduces_smooth_fields() {
        let grid = SphereGrid::new(1.0, 32).unwrap();
        let f = ScalarField::parse("x1*x2 + x3^3").unwrap();
        let mut vals = grid.sample(&grid.geom0, &f, 0.0);
        let exact = vals.clone();
        // corrupt holder values and let blending restore them
        for c in 0..2 {
            for k in 0..grid.len() {
                if grid.pou[c][k] == 0.0 {
                    vals[c][k] = 7.0;
                }
            }
        }
        grid.blend(&mut vals);
        for c in 0..2 {
            for k in 0..grid.len() {
                assert!((vals[c][k] - exact[c][k]).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn grid_quadrature_of_area() {
        let grid = SphereGrid::new(1.0, 64).unwrap();
        let one = grid.sample(&grid.geom0, &ScalarField::constant(1.0), 0.0);
        let a = grid.integrate(&grid.geom0, &one);
        assert!((a / (4.0 * std::f64::consts::PI) - 1.0).abs() < 1e-7, "{a}");
    }

    #[test]
    fn constant_temperature_stays_constant() {
        let grid = SphereGrid::new(1.0, 24).unwrap();
        let p = ScalarProblem::heat(FluxLaw::Linear { kappa: 1.0 });
        let f0 = GridField::new(&grid, &p, &ScalarField::constant(2.5), 0.0);
        let f = run_scalar(&grid, f0, &p, 0.01, 5, |_| {}).unwrap();
        assert!(f.values.iter().flatten().all(|v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn pure_transport_on_dilating_sphere() {
        let grid = SphereGrid::new(1.0, 24).unwrap();
        let mut p = ScalarProblem::diffusion(FluxLaw::Linear { kappa: 0.0 });
        p.motion = MotionLaw::dilation();
        let f0 = GridField::new(&grid, &p, &ScalarField::constant(1.0), 0.0);
        let f = run_scalar(&grid, f0, &p, 1.0, 50, |_| {}).unwrap();
        let exact = ScalarField::parse("(1+t)^(-2)").unwrap();
        assert!(f.relative_error(&grid, &exact) < 1e-9);
    }

    #[test]
    fn resting_barotropic_state_is_steady() {
        let grid = SphereGrid::new(1.0, 24).unwrap();
        let law = PressureLaw::Quadratic;
        let b0 = BarotropicField::new(&grid, &ScalarField::constant(1.3), &crate::field::VectorField::zero());
        let b = step_barotropic_tangential(&grid, &b0, &law, 1e-3).unwrap();
        assert!(b.rho.iter().flatten().all(|r| (r - 1.3).abs() < 1e-14));
        assert!(b.v.iter().flatten().all(|v| norm(v) < 1e-14));
    }

    #[test]
    fn report_measures_drift_against_budget() {
        let mk = |t: f64, m: f64, rate: f64| ConservationSample {
            integrals: Tracked { t, values: [m, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0] },
            rates: [rate, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            scales: [2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        };
        let rep = conservation_report(&[mk(0.0, 2.0, 1.0), mk(1.0, 3.0, 1.0), mk(2.0, 4.5, 1.0)]);
        assert!((rep.drift.mass - 0.25).abs() < 1e-15);
        assert_eq!(rep.budget[2][0], 2.0);
    }

    #[test]
    fn dump_layout() {
        let dir = std::env::temp_dir().join("surfcalc_dump_layout.bin");
        write_dump(&dir, 1, [2, 3], 0.5, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let bytes = std::fs::read(&dir).unwrap();
        assert_eq!(bytes.len(), 32 + 48);
        assert_eq!(u64::from_le_bytes(bytes[0..8].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 3);
        assert_eq!(f64::from_le_bytes(bytes[24..32].try_into().unwrap()), 0.5);
        assert_eq!(f64::from_le_bytes(bytes[72..80].try_into().unwrap()), 6.0);
        std::fs::remove_file(&dir).ok();
    }

    #[test]
    fn oversized_steps_are_rejected() {
        let grid = SphereGrid::new(1.0, 32).unwrap();
        let p = ScalarProblem::heat(FluxLaw::Linear { kappa: 1.0 });
        let f0 = GridField::new(&grid, &p, &ScalarField::parse("x3").unwrap(), 0.0);
        assert!(matches!(step_heat(&grid, &f0, &p, 0.1), Err(Error::StabilityViolation { .. })));
    }
}
