//! Fubini–Study geometry of CP^n in the chart `psi^0 != 0`, and the embedded
//! geometry of the projector manifold inside the hermitian matrices.

use crate::error::{Error, Result};
use crate::fd::{central_richardson, Lin};
use crate::linalg::{c, commutator, max_abs, outer, re, CMatrix, CVector, HermitianOp, ProjectorState, PureState, C64, I};

/// States with `|psi^0|` below this are rejected by chart operations.
pub const CHART_CUTOFF: f64 = 1e-8;
/// Step on chart coordinates for finite-difference checks.
pub const CHART_STEP: f64 = 1e-4;

/// Coordinates `z^i = psi^i / psi^0` of the chart around `e_0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartPoint {
    z: CVector,
}

impl ChartPoint {
    pub fn new(z: CVector) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::DimensionTooSmall(1));
        }
        if z.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
            return Err(Error::InvalidArgument("chart coordinates must be finite".into()));
        }
        Ok(Self { z })
    }

    pub fn from_slice(z: &[C64]) -> Result<Self> {
        Self::new(CVector::from_column_slice(z))
    }

    pub fn origin(n: usize) -> Self {
        Self { z: CVector::zeros(n) }
    }

    pub fn from_state(psi: &PureState) -> Result<Self> {
        let a = psi.amplitudes();
        let modulus = a[0].norm();
        if modulus < CHART_CUTOFF {
            return Err(Error::OutsideChart { modulus });
        }
        Self::new(CVector::from_fn(a.len() - 1, |i, _| a[i + 1] / a[0]))
    }

    /// Number of complex coordinates `n`.
    pub fn n(&self) -> usize {
        self.z.len()
    }

    pub fn z(&self) -> &CVector {
        &self.z
    }

    pub fn w(&self) -> CVector {
        self.z.map(|x| x.conj())
    }

    /// `Delta = 1 + sum z^i w^i`
    pub fn delta(&self) -> f64 {
        1.0 + self.z.norm_squared()
    }

    /// `(1, z^1, ..., z^n)`
    pub fn homogeneous(&self) -> CVector {
        let n = self.n();
        CVector::from_fn(n + 1, |mu, _| if mu == 0 { re(1.0) } else { self.z[mu - 1] })
    }

    /// Ket `(1, z)/sqrt(Delta)`.
    pub fn state(&self) -> PureState {
        PureState::normalized(self.homogeneous()).expect("homogeneous coordinates never vanish")
    }

    fn shifted(&self, k: usize, dz: C64) -> ChartPoint {
        let mut z = self.z.clone();
        z[k] += dz;
        ChartPoint { z }
    }
}

/// `rho^{mu nu} = z^mu w^nu / Delta`
pub fn embed(p: &ChartPoint) -> ProjectorState {
    let h = p.homogeneous();
    let m = outer(&h, &h).unscale(p.delta());
    ProjectorState::new(m).expect("chart embedding is a projector")
}

/// Christoffel symbols `Gamma^c_{ab}`; the conjugate ones are their complex conjugates.
#[derive(Clone, Debug)]
pub struct Christoffel {
    /// `gamma[c][(a, b)]`
    pub gamma: Vec<CMatrix>,
}

impl Christoffel {
    pub fn get(&self, c: usize, a: usize, b: usize) -> C64 {
        self.gamma[c][(a, b)]
    }

    pub fn n(&self) -> usize {
        self.gamma.len()
    }
}

impl Lin for Christoffel {
    fn scaled(&self, a: f64) -> Self {
        Christoffel { gamma: self.gamma.iter().map(|m| m.scaled(a)).collect() }
    }
    fn plus(&self, other: &Self) -> Self {
        Christoffel { gamma: self.gamma.iter().zip(&other.gamma).map(|(x, y)| x + y).collect() }
    }
}

impl Lin for Vec<C64> {
    fn scaled(&self, a: f64) -> Self {
        self.iter().map(|z| z * a).collect()
    }
    fn plus(&self, other: &Self) -> Self {
        self.iter().zip(other).map(|(x, y)| x + y).collect()
    }
}

#[derive(Clone, Debug)]
pub struct MetricData {
    /// `g[(a, b)] = g_{a bbar}`
    pub g: CMatrix,
    /// `g_inv[(a, b)] = g^{a bbar}`; contraction `sum_r g_{a rbar} g^{b rbar} = delta_ab`.
    pub g_inv: CMatrix,
    pub christoffel: Christoffel,
    pub point: ChartPoint,
}

impl MetricData {
    /// `max |sum_r g_{a rbar} g^{b rbar} - delta_ab|`
    pub fn inverse_residual(&self) -> f64 {
        let n = self.point.n();
        max_abs(&(&self.g * self.g_inv.transpose() - CMatrix::identity(n, n)))
    }
}

/// `g_{a bbar} = (Delta delta_ab - z^b w^a) / 2 Delta^2`
pub fn metric_components(p: &ChartPoint) -> CMatrix {
    let d = p.delta();
    let z = p.z();
    let w = p.w();
    CMatrix::from_fn(p.n(), p.n(), |a, b| {
        let delta_ab = if a == b { d } else { 0.0 };
        (re(delta_ab) - z[b] * w[a]) * (0.5 / (d * d))
    })
}

pub fn christoffel(p: &ChartPoint) -> Christoffel {
    let n = p.n();
    let d = p.delta();
    let w = p.w();
    let gamma = (0..n)
        .map(|cc| {
            CMatrix::from_fn(n, n, |a, b| {
                let mut s = C64::new(0.0, 0.0);
                if cc == b {
                    s += w[a];
                }
                if cc == a {
                    s += w[b];
                }
                -s / d
            })
        })
        .collect();
    Christoffel { gamma }
}

pub fn fs_metric(p: &ChartPoint) -> MetricData {
    let n = p.n();
    let d = p.delta();
    let z = p.z();
    let w = p.w();
    let g_inv = CMatrix::from_fn(n, n, |a, b| {
        let delta_ab = if a == b { 1.0 } else { 0.0 };
        (re(delta_ab) + z[a] * w[b]) * (2.0 * d)
    });
    MetricData { g: metric_components(p), g_inv, christoffel: christoffel(p), point: p.clone() }
}

/// `R_{a bbar c dbar}`; all components with other index types vanish.
#[derive(Clone, Debug)]
pub struct RiemannTensor {
    n: usize,
    data: Vec<C64>,
}

impl RiemannTensor {
    fn idx(&self, a: usize, b: usize, c: usize, d: usize) -> usize {
        ((a * self.n + b) * self.n + c) * self.n + d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> C64 {
        self.data[self.idx(a, b, c, d)]
    }

    pub fn max_difference(&self, other: &RiemannTensor) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
    }

    /// `R(u, ubar, u, ubar) / g(u, ubar)^2`, constant (= 4) for this metric.
    pub fn holomorphic_sectional(&self, g: &CMatrix, u: &CVector) -> f64 {
        let n = self.n;
        let mut num = C64::new(0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                for cc in 0..n {
                    for d in 0..n {
                        num += self.get(a, b, cc, d) * u[a] * u[b].conj() * u[cc] * u[d].conj();
                    }
                }
            }
        }
        let mut gu = C64::new(0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                gu += g[(a, b)] * u[a] * u[b].conj();
            }
        }
        num.re / (gu.re * gu.re)
    }
}

/// `R_{a bbar c dbar} = 2 (g_{a bbar} g_{c dbar} + g_{a dbar} g_{c bbar})`.
///
/// This is the curvature of the metric [`metric_components`] with the
/// convention `R_{a bbar c dbar} = -g_{e bbar} d_dbar Gamma^e_{ac}`; see
/// [`riemann_from_christoffel_fd`].
pub fn riemann(p: &ChartPoint) -> RiemannTensor {
    riemann_with_prefactor(p, 2.0)
}

/// `k (g_{a bbar} g_{c dbar} + g_{a dbar} g_{c bbar})` for an arbitrary prefactor `k`.
pub fn riemann_with_prefactor(p: &ChartPoint, k: f64) -> RiemannTensor {
    let n = p.n();
    let g = metric_components(p);
    let mut data = Vec::with_capacity(n.pow(4));
    for a in 0..n {
        for b in 0..n {
            for cc in 0..n {
                for d in 0..n {
                    data.push((g[(a, b)] * g[(cc, d)] + g[(a, d)] * g[(cc, b)]) * k);
                }
            }
        }
    }
    RiemannTensor { n, data }
}

/// Curvature assembled from Wirtinger finite differences of a Christoffel source:
/// `R_{a bbar c dbar} = -g_{e bbar} d_{dbar} Gamma^e_{ac}`, with
/// `d_{dbar} = (d_x + i d_y)/2` on `z^d = x + i y`.
pub fn riemann_from_christoffel_fd<F>(p: &ChartPoint, h: f64, source: F) -> RiemannTensor
where
    F: Fn(&ChartPoint) -> Christoffel,
{
    let n = p.n();
    let g = metric_components(p);
    let flat = |gam: Christoffel| -> Vec<C64> { gam.gamma.iter().flat_map(|m| m.iter().copied().collect::<Vec<_>>()).collect() };
    // dgam[d][e * n * n + col-major(a, c)]
    let dgam: Vec<Vec<C64>> = (0..n)
        .map(|d| {
            let dx = central_richardson(&|s: f64| flat(source(&p.shifted(d, c(s, 0.0)))), 0.0, h);
            let dy = central_richardson(&|s: f64| flat(source(&p.shifted(d, c(0.0, s)))), 0.0, h);
            dx.iter().zip(&dy).map(|(x, y)| (x + I * y) * 0.5).collect()
        })
        .collect();
    let mut data = Vec::with_capacity(n.pow(4));
    for a in 0..n {
        for b in 0..n {
            for cc in 0..n {
                for d in 0..n {
                    let mut s = C64::new(0.0, 0.0);
                    for e in 0..n {
                        // nalgebra storage is column-major: (a, c) at a + c n
                        s -= g[(e, b)] * dgam[d][e * n * n + a + cc * n];
                    }
                    data.push(s);
                }
            }
        }
    }
    RiemannTensor { n, data }
}

/// `rho_A` and `rho_AB` for the chart embedding.
#[derive(Clone, Debug)]
pub struct EmbeddingJet {
    pub rho: ProjectorState,
    /// `rho_a`
    pub d: Vec<CMatrix>,
    /// `rho_bbar`
    pub dbar: Vec<CMatrix>,
    /// `rho_ab`, indexed `[a][b]`
    pub dd: Vec<Vec<CMatrix>>,
    /// `rho_{a bbar}`, indexed `[a][b]`
    pub ddbar: Vec<Vec<CMatrix>>,
    /// `rho_{abar bbar}`, indexed `[a][b]`
    pub dbardbar: Vec<Vec<CMatrix>>,
}

impl EmbeddingJet {
    pub fn max_difference(&self, other: &EmbeddingJet) -> f64 {
        let mut m: f64 = 0.0;
        for (x, y) in self.d.iter().zip(&other.d).chain(self.dbar.iter().zip(&other.dbar)) {
            m = m.max(max_abs(&(x - y)));
        }
        for (xs, ys) in [(&self.dd, &other.dd), (&self.ddbar, &other.ddbar), (&self.dbardbar, &other.dbardbar)] {
            for (xr, yr) in xs.iter().zip(ys.iter()) {
                for (x, y) in xr.iter().zip(yr) {
                    m = m.max(max_abs(&(x - y)));
                }
            }
        }
        m
    }
}

pub fn embedding_jet(p: &ChartPoint) -> EmbeddingJet {
    let n = p.n();
    let big_n = n + 1;
    let d = p.delta();
    let zh = p.homogeneous();
    let wh = zh.map(|x| x.conj());
    let z = p.z();
    let w = p.w();
    let kd = |mu: usize, a: usize| if mu == a + 1 { 1.0 } else { 0.0 };
    let kab = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let d2 = d * d;
    let d3 = d2 * d;
    let rho_a: Vec<CMatrix> = (0..n)
        .map(|a| CMatrix::from_fn(big_n, big_n, |mu, nu| (wh[nu] * (d * kd(mu, a)) - zh[mu] * wh[nu] * w[a]) / d2))
        .collect();
    let rho_b: Vec<CMatrix> = (0..n)
        .map(|b| CMatrix::from_fn(big_n, big_n, |mu, nu| (zh[mu] * (d * kd(nu, b)) - z[b] * zh[mu] * wh[nu]) / d2))
        .collect();
    let mut dd = Vec::with_capacity(n);
    let mut ddbar = Vec::with_capacity(n);
    let mut dbardbar = Vec::with_capacity(n);
    for a in 0..n {
        let mut r1 = Vec::with_capacity(n);
        let mut r2 = Vec::with_capacity(n);
        let mut r3 = Vec::with_capacity(n);
        for b in 0..n {
            r1.push(CMatrix::from_fn(big_n, big_n, |mu, nu| {
                (zh[mu] * wh[nu] * w[a] * w[b] * 2.0 - (w[b] * wh[nu] * kd(mu, a) + w[a] * wh[nu] * kd(mu, b)) * d) / d3
            }));
            r2.push(CMatrix::from_fn(big_n, big_n, |mu, nu| {
                let inner = z[b] * wh[nu] * kd(mu, a) + zh[mu] * w[a] * kd(nu, b) + zh[mu] * wh[nu] * kab(a, b)
                    - re(d * kd(mu, a) * kd(nu, b));
                (z[b] * zh[mu] * w[a] * wh[nu] * 2.0 - inner * d) / d3
            }));
            r3.push(CMatrix::from_fn(big_n, big_n, |mu, nu| {
                (z[a] * z[b] * zh[mu] * wh[nu] * 2.0 - (z[b] * zh[mu] * kd(nu, a) + z[a] * zh[mu] * kd(nu, b)) * d) / d3
            }));
        }
        dd.push(r1);
        ddbar.push(r2);
        dbardbar.push(r3);
    }
    EmbeddingJet { rho: embed(p), d: rho_a, dbar: rho_b, dd, ddbar, dbardbar }
}

fn wirtinger<F: Fn(&ChartPoint) -> CMatrix>(f: &F, p: &ChartPoint, k: usize, h: f64) -> (CMatrix, CMatrix) {
    let dx = central_richardson(&|s: f64| f(&p.shifted(k, c(s, 0.0))), 0.0, h);
    let dy = central_richardson(&|s: f64| f(&p.shifted(k, c(0.0, s))), 0.0, h);
    let dz = (&dx - &dy * I) * re(0.5);
    let dw = (&dx + &dy * I) * re(0.5);
    (dz, dw)
}

/// Embedding jet by Wirtinger finite differences of [`embed`].
pub fn embedding_jet_fd(p: &ChartPoint, h: f64) -> EmbeddingJet {
    let n = p.n();
    let emb = |q: &ChartPoint| embed(q).matrix().clone();
    let first: Vec<(CMatrix, CMatrix)> = (0..n).map(|k| wirtinger(&emb, p, k, h)).collect();
    let mut dd = vec![Vec::with_capacity(n); n];
    let mut ddbar = vec![Vec::with_capacity(n); n];
    let mut dbardbar = vec![Vec::with_capacity(n); n];
    for a in 0..n {
        let da = |q: &ChartPoint| wirtinger(&emb, q, a, h).0;
        let dabar = |q: &ChartPoint| wirtinger(&emb, q, a, h).1;
        for b in 0..n {
            let (dab, dabb) = wirtinger(&da, p, b, h);
            dd[a].push(dab);
            ddbar[a].push(dabb);
            dbardbar[a].push(wirtinger(&dabar, p, b, h).1);
        }
    }
    EmbeddingJet {
        rho: embed(p),
        d: first.iter().map(|x| x.0.clone()).collect(),
        dbar: first.iter().map(|x| x.1.clone()).collect(),
        dd,
        ddbar,
        dbardbar,
    }
}

/// Chart covariant derivative `nabla_b rho_a = Gamma^c_{ba} rho_c`.
pub fn chart_covariant_derivative(metric: &MetricData, jet: &EmbeddingJet, a: usize, b: usize) -> CMatrix {
    let n = metric.point.n();
    let dim = jet.rho.dim();
    (0..n).fold(CMatrix::zeros(dim, dim), |acc, cc| acc + &jet.d[cc] * metric.christoffel.get(cc, b, a))
}

/// `[rho, [rho, A]] = rho A rho~ + rho~ A rho`, for arbitrary square matrices.
pub fn tangent_project_matrix(rho: &ProjectorState, a: &CMatrix) -> CMatrix {
    let r = rho.matrix();
    commutator(r, &commutator(r, a))
}

/// Orthogonal projection of a hermitian matrix onto the tangent space at `rho`.
pub fn tangent_project(rho: &ProjectorState, a: &HermitianOp) -> HermitianOp {
    HermitianOp::hermitian_part(&tangent_project_matrix(rho, a.matrix()))
}

/// A value together with the size of the normal component discarded to compute it.
#[derive(Clone, Debug)]
pub struct Diagnosed<T> {
    pub value: T,
    pub normal_residual: f64,
}

/// `J(X) = i[X, rho]`. Non-tangent input is projected first; the discarded
/// normal part is reported.
pub fn complex_structure(rho: &ProjectorState, x: &HermitianOp) -> Diagnosed<HermitianOp> {
    let xp = tangent_project(rho, x);
    let normal_residual = max_abs(&(x.matrix() - xp.matrix()));
    Diagnosed { value: complex_structure_tangent(rho, &xp), normal_residual }
}

/// `J(X) = i[X, rho]` without projection.
pub fn complex_structure_tangent(rho: &ProjectorState, x: &HermitianOp) -> HermitianOp {
    HermitianOp::hermitian_part(&(commutator(x.matrix(), rho.matrix()) * I))
}

pub use crate::linalg::metric_g;

/// `omega(X, Y) = G(J X, Y) = Tr(i[X, rho] Y)/2`.
pub fn symplectic_omega(rho: &ProjectorState, x: &HermitianOp, y: &HermitianOp) -> f64 {
    0.5 * (commutator(x.matrix(), rho.matrix()) * I * y.matrix()).trace().re
}

/// Fubini–Study distance `arccos sqrt(Tr rho0 rho1)`, in `[0, pi/2]`.
pub fn fs_distance(rho0: &ProjectorState, rho1: &ProjectorState) -> f64 {
    let f = rho0.expectation(rho1.matrix()).re.clamp(0.0, 1.0);
    (1.0 - f).sqrt().atan2(f.sqrt())
}

/// Tangent vector `|u><psi| + |psi><u|` at `|psi><psi|` for `u` orthogonal to `psi`.
pub fn tangent_from_ket(psi: &PureState, u: &CVector) -> HermitianOp {
    let p = psi.amplitudes();
    HermitianOp::hermitian_part(&(outer(u, p) + outer(p, u)))
}
