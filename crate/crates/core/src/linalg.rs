//! Complex hermitian linear algebra: states, projectors, hermitian operators,
//! row-major operator vectorization and the superoperators built on it.
//!
//! Vectorization is row-major throughout: `|A> = (A_00, A_01, ..., A_{N-1,N-1})`,
//! so that `(A kron B^T) |C> = |A C B>`.

use std::cmp::Ordering;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Tolerance on hermiticity and normalization of inputs.
pub const INPUT_TOL: f64 = 1e-12;
/// Tolerance on derived quantities such as idempotence.
pub const DERIVED_TOL: f64 = 1e-10;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// `|u><v|`
pub fn outer(u: &CVector, v: &CVector) -> CMatrix {
    u * v.adjoint()
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Row-major vectorization of a square matrix.
pub fn vectorize(m: &CMatrix) -> CVector {
    let n = m.nrows();
    CVector::from_fn(n * m.ncols(), |k, _| m[(k / n, k % n)])
}

pub fn unvectorize(v: &CVector, n: usize) -> CMatrix {
    assert_eq!(v.len(), n * n, "vector length is not a square");
    CMatrix::from_fn(n, n, |i, j| v[i * n + j])
}

/// Normalized ket of dimension `N >= 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amps: CVector,
}

impl PureState {
    /// Wraps amplitudes that are already unit norm.
    pub fn new(amps: CVector) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::DimensionTooSmall(amps.len()));
        }
        let norm = amps.norm();
        if (norm - 1.0).abs() > INPUT_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amps })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(amps: CVector) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::DimensionTooSmall(amps.len()));
        }
        let norm = amps.norm();
        if !(norm > 1e-300) || !norm.is_finite() {
            return Err(Error::ZeroState);
        }
        Ok(Self { amps: amps.unscale(norm) })
    }

    pub fn from_slice(amps: &[C64]) -> Result<Self> {
        Self::normalized(CVector::from_column_slice(amps))
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::normalized(CVector::from_iterator(amps.len(), amps.iter().map(|&x| re(x))))
    }

    /// Basis ket `e_k`.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        if k >= dim {
            return Err(Error::InvalidArgument(format!("basis index {k} out of range for dimension {dim}")));
        }
        let mut amps = CVector::zeros(dim);
        amps[k] = re(1.0);
        Ok(Self { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amps
    }

    /// `<self|other>`
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amps.dotc(&other.amps)
    }

    pub fn projector(&self) -> ProjectorState {
        ProjectorState { mat: outer(&self.amps, &self.amps) }
    }

    /// Multiplies by a global phase `e^{i theta}`.
    pub fn with_phase(&self, theta: f64) -> Self {
        Self { amps: self.amps.map(|z| z * C64::from_polar(1.0, theta)) }
    }

    /// Fixes the global phase so that the largest-modulus amplitude is real positive.
    pub fn canonical(&self) -> Self {
        let k = largest_component(&self.amps);
        let ph = self.amps[k].arg();
        self.with_phase(-ph)
    }
}

fn largest_component(v: &CVector) -> usize {
    let mut best = 0;
    for k in 1..v.len() {
        if v[k].norm() > v[best].norm() + 1e-14 {
            best = k;
        }
    }
    best
}

/// Rank-one hermitian projector with unit trace: a point of state space.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectorState {
    mat: CMatrix,
}

impl ProjectorState {
    pub fn new(mat: CMatrix) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::NotProjector { reason: "matrix is not square".into() });
        }
        if mat.nrows() < 2 {
            return Err(Error::DimensionTooSmall(mat.nrows()));
        }
        let herm = hermiticity_residual(&mat);
        if herm > INPUT_TOL {
            return Err(Error::NotHermitian { residual: herm });
        }
        let tr = mat.trace();
        if (tr - re(1.0)).norm() > INPUT_TOL {
            return Err(Error::NotProjector { reason: format!("trace {tr} differs from 1") });
        }
        let idem = max_abs(&(&mat * &mat - &mat));
        if idem > DERIVED_TOL {
            return Err(Error::NotProjector { reason: format!("|rho^2 - rho| = {idem:.3e}") });
        }
        Ok(Self { mat })
    }

    pub fn from_state(psi: &PureState) -> Self {
        psi.projector()
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    /// `I - rho`
    pub fn complement(&self) -> CMatrix {
        CMatrix::identity(self.dim(), self.dim()) - &self.mat
    }

    /// `Tr(rho A)`
    pub fn expectation(&self, a: &CMatrix) -> C64 {
        (&self.mat * a).trace()
    }

    /// A representative ket, phase-fixed by [`PureState::canonical`].
    pub fn ket(&self) -> PureState {
        let n = self.dim();
        let k = (0..n)
            .max_by(|&a, &b| self.mat[(a, a)].re.partial_cmp(&self.mat[(b, b)].re).unwrap_or(Ordering::Equal))
            .unwrap_or(0);
        let col = self.mat.column(k).into_owned();
        PureState::normalized(col).expect("projector column cannot vanish").canonical()
    }
}

/// Hermitian `N x N` matrix: a hamiltonian or a tangent vector of u(N).
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOp {
    mat: CMatrix,
}

impl HermitianOp {
    pub fn new(mat: CMatrix) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::DimensionMismatch { expected: mat.nrows(), found: mat.ncols() });
        }
        let residual = hermiticity_residual(&mat);
        if residual > INPUT_TOL * (1.0 + max_abs(&mat)) {
            return Err(Error::NotHermitian { residual });
        }
        Ok(Self::hermitian_part(&mat))
    }

    /// `(M + M^dagger)/2`; used for results that are hermitian up to roundoff.
    pub fn hermitian_part(m: &CMatrix) -> Self {
        Self { mat: (m + m.adjoint()).unscale(2.0) }
    }

    pub fn from_real(rows: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != rows * rows {
            return Err(Error::DimensionMismatch { expected: rows * rows, found: entries.len() });
        }
        Self::new(CMatrix::from_fn(rows, rows, |i, j| re(entries[i * rows + j])))
    }

    pub fn zeros(n: usize) -> Self {
        Self { mat: CMatrix::zeros(n, n) }
    }

    pub fn identity(n: usize) -> Self {
        Self { mat: CMatrix::identity(n, n) }
    }

    pub fn pauli_x() -> Self {
        Self { mat: CMatrix::from_row_slice(2, 2, &[re(0.0), re(1.0), re(1.0), re(0.0)]) }
    }

    pub fn pauli_y() -> Self {
        Self { mat: CMatrix::from_row_slice(2, 2, &[re(0.0), -I, I, re(0.0)]) }
    }

    pub fn pauli_z() -> Self {
        Self { mat: CMatrix::from_row_slice(2, 2, &[re(1.0), re(0.0), re(0.0), re(-1.0)]) }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    /// `i[A, B]`, hermitian whenever A and B are.
    pub fn i_commutator(&self, other: &HermitianOp) -> HermitianOp {
        Self::hermitian_part(&(commutator(&self.mat, &other.mat) * I))
    }

    /// `U A U^dagger`
    pub fn conjugate_by(&self, u: &CMatrix) -> HermitianOp {
        Self::hermitian_part(&(u * &self.mat * u.adjoint()))
    }

    pub fn scale(&self, x: f64) -> HermitianOp {
        Self { mat: self.mat.scale(x) }
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.mat)
    }
}

impl Add for &HermitianOp {
    type Output = HermitianOp;
    fn add(self, rhs: &HermitianOp) -> HermitianOp {
        HermitianOp { mat: &self.mat + &rhs.mat }
    }
}

impl Sub for &HermitianOp {
    type Output = HermitianOp;
    fn sub(self, rhs: &HermitianOp) -> HermitianOp {
        HermitianOp { mat: &self.mat - &rhs.mat }
    }
}

impl Mul<f64> for &HermitianOp {
    type Output = HermitianOp;
    fn mul(self, x: f64) -> HermitianOp {
        self.scale(x)
    }
}

impl Neg for &HermitianOp {
    type Output = HermitianOp;
    fn neg(self) -> HermitianOp {
        self.scale(-1.0)
    }
}

/// `N^2 x N^2` operator acting on row-major vectorized matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperOp {
    mat: CMatrix,
    n: usize,
}

impl SuperOp {
    pub fn from_matrix(mat: CMatrix, n: usize) -> Self {
        assert_eq!(mat.nrows(), n * n);
        assert_eq!(mat.ncols(), n * n);
        Self { mat, n }
    }

    pub fn identity(n: usize) -> Self {
        Self { mat: CMatrix::identity(n * n, n * n), n }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    /// Dimension of the underlying operator space (N, not N^2).
    pub fn base_dim(&self) -> usize {
        self.n
    }

    pub fn apply_vec(&self, v: &CVector) -> CVector {
        &self.mat * v
    }

    pub fn apply(&self, a: &CMatrix) -> CMatrix {
        unvectorize(&(&self.mat * vectorize(a)), self.n)
    }

    pub fn compose(&self, other: &SuperOp) -> SuperOp {
        SuperOp { mat: &self.mat * &other.mat, n: self.n }
    }

    pub fn pow(&self, k: u32) -> SuperOp {
        (0..k).fold(SuperOp::identity(self.n), |acc, _| acc.compose(self))
    }
}

/// `ad_A = A ⊗ I - I ⊗ A^T`, so `ad_A |X> = |[A, X]>`.
pub fn adjoint_superop(a: &HermitianOp) -> SuperOp {
    let n = a.dim();
    let id = CMatrix::identity(n, n);
    SuperOp { mat: kron(a.matrix(), &id) - kron(&id, &a.matrix().transpose()), n }
}

/// Tangent projector `rho ⊗ I + I ⊗ rho^T - 2 rho ⊗ rho^T`.
pub fn projector_superop(rho: &ProjectorState) -> SuperOp {
    let n = rho.dim();
    let id = CMatrix::identity(n, n);
    let r = rho.matrix();
    let rt = r.transpose();
    SuperOp { mat: kron(r, &id) + kron(&id, &rt) - kron(r, &rt).scale(2.0), n }
}

/// `R = |rho><rho| = rho ⊗ rho^T`.
pub fn density_superop(rho: &ProjectorState) -> SuperOp {
    let r = rho.matrix();
    SuperOp { mat: kron(r, &r.transpose()), n: rho.dim() }
}

/// Even part `rho D rho + rho~ D rho~` (normal to state space).
pub fn even_part(rho: &ProjectorState, d: &CMatrix) -> CMatrix {
    let r = rho.matrix();
    let rc = rho.complement();
    r * d * r + &rc * d * &rc
}

/// Odd part `rho D rho~ + rho~ D rho` (tangent to state space).
pub fn odd_part(rho: &ProjectorState, d: &CMatrix) -> CMatrix {
    let r = rho.matrix();
    let rc = rho.complement();
    r * d * &rc + &rc * d * r
}

/// Eigen-decomposition `H = sum_k lambda_k v_k v_k^dagger`.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, aligned with `eigenvalues`.
    pub eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.apply_function(re)
    }

    /// `f(H) = V diag(f(lambda)) V^dagger`.
    pub fn apply_function<F: Fn(f64) -> C64>(&self, f: F) -> CMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let fk = f(lam);
            scaled.column_mut(k).iter_mut().for_each(|z| *z *= fk);
        }
        scaled * v.adjoint()
    }

    /// `e^{-itH}`
    pub fn propagator(&self, t: f64) -> CMatrix {
        self.apply_function(|lam| C64::from_polar(1.0, -lam * t))
    }
}

/// Spectral decomposition of a hermitian matrix given as a raw matrix.
pub fn spectral_decompose_matrix(m: &CMatrix) -> Result<SpectralDecomposition> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
    }
    let residual = hermiticity_residual(m);
    if residual > INPUT_TOL * (1.0 + max_abs(m)) {
        return Err(Error::NotHermitian { residual });
    }
    let sym = (m + m.adjoint()).unscale(2.0);
    let eig = SymmetricEigen::new(sym);
    let n = m.nrows();
    let mut cols: Vec<(f64, CVector)> = (0..n)
        .map(|k| (eig.eigenvalues[k], canonical_eigenvector(eig.eigenvectors.column(k).into_owned())))
        .collect();
    cols.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));
    // ties broken by lexicographic order of the phase-fixed eigenvectors
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (cols[start].0 - cols[end].0).abs() <= DERIVED_TOL {
            end += 1;
        }
        cols[start..end].sort_by(|a, b| lexicographic(&a.1, &b.1));
        start = end;
    }
    let eigenvectors = CMatrix::from_columns(&cols.iter().map(|(_, v)| v.clone()).collect::<Vec<_>>());
    Ok(SpectralDecomposition { eigenvalues: cols.into_iter().map(|(l, _)| l).collect(), eigenvectors })
}

pub fn spectral_decompose(h: &HermitianOp) -> Result<SpectralDecomposition> {
    spectral_decompose_matrix(h.matrix())
}

fn canonical_eigenvector(v: CVector) -> CVector {
    match v.iter().position(|z| z.norm() > DERIVED_TOL) {
        Some(k) => {
            let ph = C64::from_polar(1.0, -v[k].arg());
            v.map(|z| z * ph)
        }
        None => v,
    }
}

fn lexicographic(a: &CVector, b: &CVector) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        for (p, q) in [(x.re, y.re), (x.im, y.im)] {
            if (p - q).abs() > DERIVED_TOL {
                return q.partial_cmp(&p).unwrap_or(Ordering::Equal);
            }
        }
    }
    Ordering::Equal
}

/// `e^{-itH}`
pub fn evolution_operator(h: &HermitianOp, t: f64) -> Result<CMatrix> {
    Ok(spectral_decompose(h)?.propagator(t))
}

/// `e^{-itH} |psi>`
pub fn evolve(h: &HermitianOp, t: f64, psi: &PureState) -> Result<PureState> {
    if h.dim() != psi.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: psi.dim() });
    }
    let u = evolution_operator(h, t)?;
    PureState::normalized(u * psi.amplitudes())
}

/// `<psi|H^m|psi>` for `m = 0..=m_max`.
pub fn expectation_powers(h: &HermitianOp, rho: &ProjectorState, m_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(m_max + 1);
    let mut acc = rho.matrix().clone();
    out.push(acc.trace().re);
    for _ in 0..m_max {
        acc = &acc * h.matrix();
        out.push(acc.trace().re);
    }
    out
}

/// `G(X, Y) = Tr(XY)/2`.
pub fn metric_g(x: &HermitianOp, y: &HermitianOp) -> f64 {
    0.5 * (x.matrix() * y.matrix()).trace().re
}

/// Checks `U^dagger U = I` and returns the residual.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    max_abs(&(u.adjoint() * u - CMatrix::identity(u.nrows(), u.ncols())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rho00() -> ProjectorState {
        PureState::basis(2, 0).unwrap().projector()
    }

    #[test]
    fn identity_spectrum() {
        let d = spectral_decompose(&HermitianOp::identity(2)).unwrap();
        assert_eq!(d.eigenvalues, vec![1.0, 1.0]);
    }

    #[test]
    fn pauli_x_spectrum() {
        let d = spectral_decompose(&HermitianOp::pauli_x()).unwrap();
        assert!((d.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((d.eigenvalues[1] + 1.0).abs() < 1e-14);
        assert!(max_abs(&(d.reconstruct() - HermitianOp::pauli_x().matrix())) < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[re(0.0), re(1.0), re(0.5), re(0.0)]);
        match spectral_decompose_matrix(&m) {
            Err(Error::NotHermitian { residual }) => assert!((residual - 0.5).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_time_evolution_is_identity() {
        let psi = PureState::from_slice(&[c(0.3, 0.1), c(-0.2, 0.5), c(0.7, 0.0)]).unwrap();
        let h = HermitianOp::from_real(3, &[1.0, 0.2, 0.0, 0.2, -0.5, 0.3, 0.0, 0.3, 0.1]).unwrap();
        let out = evolve(&h, 0.0, &psi).unwrap();
        assert!((out.amplitudes() - psi.amplitudes()).norm() < 1e-14);
    }

    #[test]
    fn identity_adjoint_is_zero() {
        let s = adjoint_superop(&HermitianOp::identity(3));
        assert!(max_abs(s.matrix()) < 1e-15);
    }

    #[test]
    fn adjoint_of_rho0_on_sigma_x() {
        // [diag(1,0), sigma_x] = [[0,1],[-1,0]]
        let r = HermitianOp::new(rho00().matrix().clone()).unwrap();
        let out = adjoint_superop(&r).apply(HermitianOp::pauli_x().matrix());
        let expected = CMatrix::from_row_slice(2, 2, &[re(0.0), re(1.0), re(-1.0), re(0.0)]);
        assert!(max_abs(&(out - expected)) < 1e-15);
    }

    #[test]
    fn projector_superop_on_paulis() {
        let p = projector_superop(&rho00());
        assert!(max_abs(&p.apply(HermitianOp::pauli_z().matrix())) < 1e-15);
        let sx = HermitianOp::pauli_x();
        assert!(max_abs(&(p.apply(sx.matrix()) - sx.matrix())) < 1e-15);
    }

    #[test]
    fn vectorization_matches_kron_identity() {
        // (A ⊗ B^T)|C> = |ACB>
        let a = CMatrix::from_fn(3, 3, |i, j| c(i as f64 + 0.5, j as f64 - 1.0));
        let b = CMatrix::from_fn(3, 3, |i, j| c((i * j) as f64, 0.3 * i as f64));
        let cm = CMatrix::from_fn(3, 3, |i, j| c(j as f64, i as f64 * 0.7));
        let lhs = kron(&a, &b.transpose()) * vectorize(&cm);
        let rhs = vectorize(&(&a * &cm * &b));
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn canonical_phase_makes_largest_real() {
        let psi = PureState::from_slice(&[c(0.1, 0.2), c(0.0, -0.9)]).unwrap().canonical();
        assert!(psi.amplitudes()[1].im.abs() < 1e-15 && psi.amplitudes()[1].re > 0.0);
    }

    #[test]
    fn state_validation() {
        assert!(matches!(PureState::new(CVector::from_element(2, re(1.0))), Err(Error::NotNormalized { .. })));
        assert!(matches!(PureState::from_real(&[1.0]), Err(Error::DimensionTooSmall(1))));
        assert!(matches!(PureState::from_real(&[0.0, 0.0]), Err(Error::ZeroState)));
    }
}
