//! Hamiltonians maximizing the initial acceleration or the third-order
//! geometric phase of a state, under `Tr H = 0` and `Tr H^2 / 2 = 1`.
//!
//! Both problems are solved at the coherent state `e_0` and moved to any other
//! state by a geodesic unitary, `H' = U H U^dagger`.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::curves::{covariant_jet, Curve};
use crate::error::{Error, Result};
use crate::linalg::{
    expectation_powers, max_abs, outer, re, spectral_decompose_matrix, CMatrix, CVector, HermitianOp, ProjectorState,
    PureState, C64,
};
use crate::phase::{phase_derivs_covariant, schrodinger_d3};

/// Sign choice of the diagonal of the optimal 2x2 block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// `H = [[b, v^dagger], [v, B]]` relative to `e_0`.
#[derive(Clone, Debug)]
pub struct BlockDecomposition {
    pub b: f64,
    pub v_block: CVector,
    pub big_b: CMatrix,
    /// `|v|`
    pub beta_block: f64,
    /// `B - b I`
    pub b_tilde: CMatrix,
    /// Eigenvalues of `B~`, the one of largest modulus first.
    pub lambda: Vec<f64>,
    /// Eigenvector of `lambda[0]`; among degenerate candidates the one with largest `|<u|v>|`.
    pub lambda1_vector: CVector,
}

impl BlockDecomposition {
    pub fn new(h: &HermitianOp) -> Result<Self> {
        let n = h.dim() - 1;
        let m = h.matrix();
        let b = m[(0, 0)].re;
        let v_block = CVector::from_fn(n, |i, _| m[(i + 1, 0)]);
        let big_b = m.view((1, 1), (n, n)).into_owned();
        let b_tilde = &big_b - CMatrix::identity(n, n) * re(b);
        let spec = spectral_decompose_matrix(&b_tilde)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| spec.eigenvalues[y].abs().partial_cmp(&spec.eigenvalues[x].abs()).unwrap());
        let top = spec.eigenvalues[order[0]].abs();
        let lambda1_index = order
            .iter()
            .copied()
            .filter(|&k| (spec.eigenvalues[k].abs() - top).abs() <= 1e-10)
            .max_by(|&x, &y| {
                let ox = spec.eigenvectors.column(x).dotc(&v_block).norm();
                let oy = spec.eigenvectors.column(y).dotc(&v_block).norm();
                ox.partial_cmp(&oy).unwrap().then(y.cmp(&x))
            })
            .expect("n >= 1");
        order.retain(|&k| k != lambda1_index);
        order.insert(0, lambda1_index);
        Ok(Self {
            b,
            beta_block: v_block.norm(),
            lambda: order.iter().map(|&k| spec.eigenvalues[k]).collect(),
            lambda1_vector: spec.eigenvectors.column(lambda1_index).into_owned(),
            v_block,
            big_b,
            b_tilde,
        })
    }

    pub fn reassemble(&self) -> HermitianOp {
        let n = self.v_block.len();
        let mut m = CMatrix::zeros(n + 1, n + 1);
        m[(0, 0)] = re(self.b);
        for i in 0..n {
            m[(i + 1, 0)] = self.v_block[i];
            m[(0, i + 1)] = self.v_block[i].conj();
        }
        m.view_mut((1, 1), (n, n)).copy_from(&self.big_b);
        HermitianOp::hermitian_part(&m)
    }

    /// `|B~ v|^2`
    pub fn accel_objective(&self) -> f64 {
        (&self.b_tilde * &self.v_block).norm_squared()
    }
}

/// `h_m = Tr(rho_0 H^m)`, `m = 0..=m_max`, `m_max <= 8`.
pub fn moments(h: &HermitianOp, rho0: &ProjectorState, m_max: usize) -> Result<Vec<f64>> {
    if m_max > 8 {
        return Err(Error::InvalidArgument(format!("moment order {m_max} exceeds 8")));
    }
    if h.dim() != rho0.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: rho0.dim() });
    }
    Ok(expectation_powers(h, rho0, m_max))
}

/// `f = h4 - 4 h3 h1 - h2^2 + 8 h2 h1^2 - 4 h1^4`
pub fn accel_objective(h: &HermitianOp, rho0: &ProjectorState) -> f64 {
    crate::curves::accel_norm_sq(h, rho0)
}

/// `|B~ v|^2` at the coherent state.
pub fn accel_objective_block(h: &HermitianOp) -> Result<f64> {
    Ok(BlockDecomposition::new(h)?.accel_objective())
}

/// Removes the trace and rescales to `Tr H^2 / 2 = 1`.
pub fn project_constraints(h: &HermitianOp) -> Result<HermitianOp> {
    let n = h.dim();
    let traceless = h - &HermitianOp::identity(n).scale(h.trace() / n as f64);
    let norm_sq = 0.5 * (traceless.matrix() * traceless.matrix()).trace().re;
    if !(norm_sq > 1e-24) {
        return Err(Error::InvalidArgument("hamiltonian is proportional to the identity".into()));
    }
    Ok(traceless.scale(1.0 / norm_sq.sqrt()))
}

/// `Tr H` and `Tr H^2 / 2 - 1`.
pub fn constraint_residuals(h: &HermitianOp) -> (f64, f64) {
    (h.trace(), 0.5 * (h.matrix() * h.matrix()).trace().re - 1.0)
}

#[derive(Clone, Debug)]
pub struct OptimalSolution {
    pub h_canonical: HermitianOp,
    pub h_transported: HermitianOp,
    pub transport_u: CMatrix,
    pub objective: f64,
    pub sign: Sign,
}

fn embed_block(n: usize, block: [f64; 4]) -> Result<HermitianOp> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    let mut m = CMatrix::zeros(n, n);
    m[(0, 0)] = re(block[0]);
    m[(0, 1)] = re(block[1]);
    m[(1, 0)] = re(block[2]);
    m[(1, 1)] = re(block[3]);
    HermitianOp::new(m)
}

/// `(1/sqrt 2) [[+-1, 1], [1, -+1]]` in the top block.
pub fn canonical_max_accel(n: usize, sign: Sign) -> Result<HermitianOp> {
    let k = 1.0 / 2f64.sqrt();
    let s = sign.value();
    embed_block(n, [s * k, k, k, -s * k])
}

/// `(1/sqrt 3) [[-+1, sqrt 2], [sqrt 2, +-1]]` in the top block; `Plus` gives
/// `b = -1/sqrt 3` and a positive third phase derivative.
pub fn canonical_brachistophase(n: usize, sign: Sign) -> Result<HermitianOp> {
    let k = 1.0 / 3f64.sqrt();
    let s = sign.value();
    let r2 = 2f64.sqrt() * k;
    embed_block(n, [-s * k, r2, r2, s * k])
}

/// `exp(L K)` with `K = |xi><from| - |from><xi|`, moving `from` to `to` (up to phase)
/// along the geodesic. Fails for orthogonal states.
pub fn geodesic_unitary(from: &PureState, to: &PureState) -> Result<CMatrix> {
    if from.dim() != to.dim() {
        return Err(Error::DimensionMismatch { expected: from.dim(), found: to.dim() });
    }
    let a = from.amplitudes();
    let o = from.inner(to);
    if o.norm_sqr() <= 1e-12 {
        return Err(Error::InvalidArgument("orthogonal states: geodesic direction not unique".into()));
    }
    let n = from.dim();
    let aligned = to.amplitudes() * (o.conj() / o.norm());
    let cos_l = o.norm();
    let perp = &aligned - a * re(cos_l);
    let sin_l = perp.norm();
    if sin_l < 1e-15 {
        return Ok(CMatrix::identity(n, n));
    }
    let xi = perp.unscale(sin_l);
    let k = outer(&xi, a) - outer(a, &xi);
    let plane = outer(a, a) + outer(&xi, &xi);
    Ok(CMatrix::identity(n, n) + k * re(sin_l) + plane * re(cos_l - 1.0))
}

/// Unitary taking the coherent state `e_0` to the target. Targets orthogonal to
/// `e_0` go through the intermediate state `(e_0 + psi)/sqrt 2`.
pub fn transport_unitary(target: &ProjectorState) -> Result<CMatrix> {
    let n = target.dim();
    let e0 = PureState::basis(n, 0)?;
    let psi = target.ket();
    if e0.inner(&psi).norm_sqr() > 1e-12 {
        return geodesic_unitary(&e0, &psi);
    }
    let mid = PureState::normalized(e0.amplitudes() + psi.amplitudes())?;
    Ok(geodesic_unitary(&mid, &psi)? * geodesic_unitary(&e0, &mid)?)
}

fn solution(canonical: HermitianOp, rho0: &ProjectorState, sign: Sign, objective: impl Fn(&HermitianOp) -> f64) -> Result<OptimalSolution> {
    if canonical.dim() != rho0.dim() {
        return Err(Error::DimensionMismatch { expected: canonical.dim(), found: rho0.dim() });
    }
    let u = transport_unitary(rho0)?;
    let h_transported = canonical.conjugate_by(&u);
    Ok(OptimalSolution { objective: objective(&h_transported), h_canonical: canonical, h_transported, transport_u: u, sign })
}

/// Hamiltonian of maximal initial acceleration at `rho0` (objective 1).
pub fn max_accel_hamiltonian(rho0: &ProjectorState, sign: Sign) -> Result<OptimalSolution> {
    solution(canonical_max_accel(rho0.dim(), sign)?, rho0, sign, |h| accel_objective(h, rho0))
}

/// Hamiltonian maximizing the third phase derivative at `rho0` (objective `4 sqrt 3 / 9`).
pub fn brachistophase_hamiltonian(rho0: &ProjectorState, sign: Sign) -> Result<OptimalSolution> {
    solution(canonical_brachistophase(rho0.dim(), sign)?, rho0, sign, |h| schrodinger_d3(h, rho0))
}

/// Third and fifth phase derivatives of the Schrödinger curve at `t = 0`.
pub fn odd_phase_derivatives(h: &HermitianOp, rho0: &ProjectorState) -> Result<(f64, f64)> {
    let curve = Curve::schrodinger(h.clone(), rho0.ket())?;
    let d = phase_derivs_covariant(&covariant_jet(&curve, 0.0)?);
    Ok((d.get(3).expect("order 3"), d.get(5).expect("order 5")))
}

/// Truncated Taylor model `tau^3/3! phi''' (+ tau^5/5! phi^(5))`; `order` is 3 or 5.
pub fn taylor_phase(h: &HermitianOp, rho0: &ProjectorState, tau: f64, order: u32) -> Result<f64> {
    if tau < 0.0 {
        return Err(Error::InvalidArgument(format!("tau must be non-negative, got {tau}")));
    }
    match order {
        3 => Ok(tau.powi(3) / 6.0 * schrodinger_d3(h, rho0)),
        5 => {
            let (d3, d5) = odd_phase_derivatives(h, rho0)?;
            Ok(tau.powi(3) / 6.0 * d3 + tau.powi(5) / 120.0 * d5)
        }
        _ => Err(Error::InvalidArgument(format!("Taylor order must be 3 or 5, got {order}"))),
    }
}

/// `tau_0 = sqrt((phi'''/3!) / (phi^(5)/5!))`, where the two Taylor terms are equal.
pub fn tau0_threshold(h: &HermitianOp, rho0: &ProjectorState) -> Result<f64> {
    let (d3, d5) = odd_phase_derivatives(h, rho0)?;
    tau0_from_derivatives(d3, d5)
}

pub fn tau0_from_derivatives(d3: f64, d5: f64) -> Result<f64> {
    if d5.abs() < 1e-14 {
        return Err(Error::ThresholdUndefined("fifth derivative vanishes".into()));
    }
    if d3 * d5 <= 0.0 {
        return Err(Error::ThresholdUndefined(format!("derivatives of opposite sign ({d3:.6e}, {d5:.6e})")));
    }
    Ok((20.0 * d3 / d5).sqrt())
}

/// GUE sample projected onto the constraint surface.
pub fn random_hamiltonian<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> Result<HermitianOp> {
    let mut m = CMatrix::zeros(n, n);
    let half = 0.5f64.sqrt();
    for i in 0..n {
        let d: f64 = StandardNormal.sample(rng);
        m[(i, i)] = re(d);
        for j in (i + 1)..n {
            let a: f64 = StandardNormal.sample(rng);
            let b: f64 = StandardNormal.sample(rng);
            let z = C64::new(a * half, b * half);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    project_constraints(&HermitianOp::new(m)?)
}

/// Per-sample seed, independent of evaluation order.
pub fn sample_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Nodes per unit time used to unwrap the closed-form phase in [`exact_phase`].
const UNWRAP_NODES: usize = 64;

/// Geometric phase of `e^{-itH}` at `tau` from the closed form
/// `arg<psi_0|psi_t> + t h1`, unwrapped along `t in [0, tau]`.
pub fn exact_phase(h: &HermitianOp, psi0: &PureState, tau: f64) -> Result<f64> {
    let spec = crate::linalg::spectral_decompose(h)?;
    let h1 = expectation_powers(h, &psi0.projector(), 1)[1];
    let nodes = ((tau.abs() * UNWRAP_NODES as f64).ceil() as usize).max(8);
    let coeffs: DVector<C64> = spec.eigenvectors.adjoint() * psi0.amplitudes();
    let weights: Vec<(f64, f64)> = coeffs.iter().zip(&spec.eigenvalues).map(|(c, &l)| (c.norm_sqr(), l)).collect();
    let mut last = 0.0;
    for k in 1..=nodes {
        let t = tau * k as f64 / nodes as f64;
        // <psi_0|e^{-itH}|psi_0> = sum |c_k|^2 e^{-i t lambda_k}
        let overlap: C64 = weights.iter().map(|&(w, l)| C64::from_polar(w, -l * t)).sum();
        if overlap.norm() < crate::phase::BREAKDOWN_TOL {
            return Err(Error::InvalidArgument(format!("phase undefined at t = {t}")));
        }
        let raw = overlap.arg() + t * h1;
        last = raw + 2.0 * std::f64::consts::PI * ((last - raw) / (2.0 * std::f64::consts::PI)).round();
    }
    Ok(last)
}

#[derive(Clone, Debug)]
pub struct SearchSample {
    pub index: u64,
    pub phase: f64,
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub best_index: u64,
    pub best_h: HermitianOp,
    pub best_phase: f64,
    /// One entry per sample, in index order; samples with undefined phase carry NaN.
    pub trace: Vec<SearchSample>,
}

/// The `index`-th constrained random hamiltonian of the stream `seed`.
pub fn sample_hamiltonian(n: usize, seed: u64, index: u64) -> Result<HermitianOp> {
    let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(seed, index));
    random_hamiltonian(n, &mut rng)
}

/// Samples constrained random hamiltonians and keeps the one with the largest
/// phase at `tau`. Deterministic for a fixed seed, whatever the thread count.
pub fn random_search(rho0: &ProjectorState, tau: f64, samples: u64, seed: u64) -> Result<SearchResult> {
    random_search_with(rho0, samples, seed, |h| exact_phase(h, &rho0.ket(), tau))
}

/// [`random_search`] with an arbitrary score.
pub fn random_search_with<F>(rho0: &ProjectorState, samples: u64, seed: u64, score: F) -> Result<SearchResult>
where
    F: Fn(&HermitianOp) -> Result<f64> + Sync,
{
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let n = rho0.dim();
    let trace: Vec<SearchSample> = (0..samples)
        .into_par_iter()
        .map(|index| {
            let h = sample_hamiltonian(n, seed, index)?;
            let phase = score(&h).unwrap_or(f64::NAN);
            Ok(SearchSample { index, phase })
        })
        .collect::<Result<_>>()?;
    let best = trace
        .iter()
        .filter(|s| s.phase.is_finite())
        .fold(None::<&SearchSample>, |acc, s| match acc {
            Some(b) if b.phase > s.phase || (b.phase == s.phase && b.index < s.index) => Some(b),
            _ => Some(s),
        })
        .ok_or_else(|| Error::InvalidArgument("no sample produced a defined phase".into()))?;
    Ok(SearchResult { best_index: best.index, best_h: sample_hamiltonian(n, seed, best.index)?, best_phase: best.phase, trace })
}

/// Largest entry difference between two hermitian matrices.
pub fn matrix_distance(a: &HermitianOp, b: &CMatrix) -> f64 {
    max_abs(&(a.matrix() - b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coherent(n: usize) -> ProjectorState {
        PureState::basis(n, 0).unwrap().projector()
    }

    #[test]
    fn identity_moments() {
        let m = moments(&HermitianOp::identity(3), &coherent(3), 8).unwrap();
        assert!(m.iter().all(|x| (x - 1.0).abs() < 1e-15));
    }

    #[test]
    fn brachistophase_moments() {
        let h = canonical_brachistophase(4, Sign::Plus).unwrap();
        let m = moments(&h, &coherent(4), 3).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert!((m[1] + s).abs() < 1e-15 && (m[2] - 1.0).abs() < 1e-15 && (m[3] + s).abs() < 1e-15);
    }

    #[test]
    fn canonical_solutions_satisfy_constraints() {
        for n in 2..6 {
            for sign in [Sign::Plus, Sign::Minus] {
                for h in [canonical_max_accel(n, sign).unwrap(), canonical_brachistophase(n, sign).unwrap()] {
                    let (tr, q) = constraint_residuals(&h);
                    assert!(tr.abs() < 1e-15 && q.abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn block_and_moment_objectives_agree() {
        let h = HermitianOp::new(CMatrix::from_fn(4, 4, |i, j| {
            if i == j {
                re(0.3 * i as f64 - 0.4)
            } else if i < j {
                C64::new(0.2 * (i + j) as f64, 0.1 * (j - i) as f64)
            } else {
                C64::new(0.2 * (i + j) as f64, -0.1 * (i - j) as f64)
            }
        }))
        .unwrap();
        let a = accel_objective(&h, &coherent(4));
        let b = accel_objective_block(&h).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!(BlockDecomposition::new(&h).unwrap().reassemble().matrix() == h.matrix());
    }

    #[test]
    fn transport_to_e0_is_identity() {
        let u = transport_unitary(&coherent(3)).unwrap();
        assert!(max_abs(&(u - CMatrix::identity(3, 3))) < 1e-15);
    }

    #[test]
    fn antipodal_transport() {
        let target = PureState::basis(3, 2).unwrap();
        let u = transport_unitary(&target.projector()).unwrap();
        let image = PureState::normalized(u.column(0).into_owned()).unwrap();
        assert!((image.inner(&target).norm() - 1.0).abs() < 1e-12);
        assert!(crate::linalg::unitarity_residual(&u) < 1e-12);
    }

    #[test]
    fn tau0_rejects_opposite_signs() {
        assert!(matches!(tau0_from_derivatives(1.0, -1.0), Err(Error::ThresholdUndefined(_))));
        assert!(matches!(tau0_from_derivatives(1.0, 0.0), Err(Error::ThresholdUndefined(_))));
    }

    #[test]
    fn seeded_search_is_reproducible() {
        let a = random_search(&coherent(3), 0.5, 8, 7).unwrap();
        let b = random_search(&coherent(3), 0.5, 8, 7).unwrap();
        assert_eq!(a.best_index, b.best_index);
        assert_eq!(a.best_phase.to_bits(), b.best_phase.to_bits());
        assert_eq!(a.trace.len(), 8);
    }
}
