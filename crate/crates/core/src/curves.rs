//! Curves in state space: Schrödinger evolutions, geodesics and sampled paths,
//! with their ambient derivatives and covariant jets.

use crate::error::{Error, Result};
use crate::fd::{central_richardson, derivative_from_samples};
use crate::geometry::tangent_project_matrix;
use crate::linalg::{
    adjoint_superop, commutator, density_superop, expectation_powers, metric_g, outer, projector_superop, re,
    spectral_decompose, CMatrix, CVector, HermitianOp, ProjectorState, PureState, SpectralDecomposition, I,
};

/// Highest ambient derivative order available.
pub const MAX_ORDER: usize = 4;

#[derive(Clone, Debug)]
pub enum Curve {
    /// `rho_t = e^{-itH} rho_0 e^{itH}`
    Schrodinger { h: HermitianOp, psi0: PureState, spectral: SpectralDecomposition },
    /// `|psi_s> = cos(L s)|psi_0> + sin(L s)|xi>`
    Geodesic { psi0: PureState, xi: PureState, length: f64 },
    /// Kets on a strictly increasing grid, re-phased to real positive consecutive overlaps.
    Sampled { times: Vec<f64>, states: Vec<PureState> },
}

impl Curve {
    pub fn schrodinger(h: HermitianOp, psi0: PureState) -> Result<Self> {
        if h.dim() != psi0.dim() {
            return Err(Error::DimensionMismatch { expected: h.dim(), found: psi0.dim() });
        }
        let spectral = spectral_decompose(&h)?;
        Ok(Curve::Schrodinger { h, psi0, spectral })
    }

    /// Geodesic through `psi0` with unit tangent ket `xi` (orthogonal to `psi0`).
    pub fn geodesic(psi0: PureState, xi: PureState, length: f64) -> Result<Self> {
        if psi0.dim() != xi.dim() {
            return Err(Error::DimensionMismatch { expected: psi0.dim(), found: xi.dim() });
        }
        let overlap = psi0.inner(&xi).norm();
        if overlap > 1e-10 {
            return Err(Error::InvalidArgument(format!("xi is not orthogonal to psi0 (overlap {overlap:.3e})")));
        }
        Ok(Curve::Geodesic { psi0, xi, length })
    }

    pub fn sampled(times: Vec<f64>, states: Vec<PureState>) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::DimensionMismatch { expected: times.len(), found: states.len() });
        }
        if times.len() < 2 {
            return Err(Error::InsufficientSamples { needed: 2, found: times.len() });
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("sample times must be strictly increasing".into()));
        }
        let dim = states[0].dim();
        let mut rephased: Vec<PureState> = Vec::with_capacity(states.len());
        for (k, s) in states.into_iter().enumerate() {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: s.dim() });
            }
            match rephased.last() {
                None => rephased.push(s),
                Some(prev) => {
                    let o = prev.inner(&s);
                    if o.norm() < 1e-12 {
                        return Err(Error::ZeroOverlap { index: k - 1 });
                    }
                    rephased.push(s.with_phase(-o.arg()));
                }
            }
        }
        Ok(Curve::Sampled { times, states: rephased })
    }

    pub fn dim(&self) -> usize {
        match self {
            Curve::Schrodinger { psi0, .. } | Curve::Geodesic { psi0, .. } => psi0.dim(),
            Curve::Sampled { states, .. } => states[0].dim(),
        }
    }

    /// Closed interval on which the curve can be evaluated.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            Curve::Sampled { times, .. } => (times[0], times[times.len() - 1]),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    fn check_domain(&self, t: f64) -> Result<()> {
        let (start, end) = self.domain();
        let slack = 1e-12 * (1.0 + start.abs().max(end.abs()).min(1e300));
        if t.is_nan() || t < start - slack || t > end + slack {
            return Err(Error::OutOfDomain { t, start, end });
        }
        Ok(())
    }

    pub fn initial_state(&self) -> PureState {
        match self {
            Curve::Schrodinger { psi0, .. } | Curve::Geodesic { psi0, .. } => psi0.clone(),
            Curve::Sampled { states, .. } => states[0].clone(),
        }
    }

    pub fn state_at(&self, t: f64) -> Result<PureState> {
        self.check_domain(t)?;
        match self {
            Curve::Schrodinger { psi0, spectral, .. } => PureState::normalized(spectral.propagator(t) * psi0.amplitudes()),
            Curve::Geodesic { psi0, xi, length } => {
                let (s, co) = (length * t).sin_cos();
                PureState::normalized(psi0.amplitudes() * re(co) + xi.amplitudes() * re(s))
            }
            Curve::Sampled { times, states } => {
                if let Some(k) = times.iter().position(|&x| x == t) {
                    return Ok(states[k].clone());
                }
                let idx = nearest_nodes(times, t, 6);
                let nodes: Vec<f64> = idx.iter().map(|&k| times[k]).collect();
                let vals: Vec<CVector> = idx.iter().map(|&k| states[k].amplitudes().clone()).collect();
                PureState::normalized(derivative_from_samples(t, &nodes, &vals, 0))
            }
        }
    }

    pub fn rho_at(&self, t: f64) -> Result<ProjectorState> {
        Ok(self.state_at(t)?.projector())
    }

    /// Ket derivatives `psi^{(k)}(t)`, `k = 0..=order`, in the gauge of [`Curve::state_at`].
    pub fn ket_taylor(&self, t: f64, order: usize) -> Result<Vec<CVector>> {
        self.check_domain(t)?;
        match self {
            Curve::Schrodinger { h, .. } => {
                let mut out = vec![self.state_at(t)?.into_amplitudes()];
                for k in 0..order {
                    let next = (h.matrix() * &out[k]) * (-I);
                    out.push(next);
                }
                Ok(out)
            }
            Curve::Geodesic { psi0, xi, length } => Ok((0..=order)
                .map(|k| {
                    // d^k/dt^k cos(Lt) = L^k cos(Lt + k pi/2)
                    let ph = length * t + k as f64 * std::f64::consts::FRAC_PI_2;
                    let lk = length.powi(k as i32);
                    psi0.amplitudes() * re(lk * ph.cos()) + xi.amplitudes() * re(lk * ph.sin())
                })
                .collect()),
            Curve::Sampled { times, states } => {
                let needed = 2 * order + 1;
                if times.len() < needed {
                    return Err(Error::InsufficientSamples { needed, found: times.len() });
                }
                let idx = nearest_nodes(times, t, (needed + 2).min(times.len()));
                let nodes: Vec<f64> = idx.iter().map(|&k| times[k]).collect();
                let vals: Vec<CVector> = idx.iter().map(|&k| states[k].amplitudes().clone()).collect();
                Ok((0..=order).map(|k| derivative_from_samples(t, &nodes, &vals, k)).collect())
            }
        }
    }
}

fn nearest_nodes(times: &[f64], t: f64, count: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..times.len()).collect();
    idx.sort_by(|&a, &b| (times[a] - t).abs().partial_cmp(&(times[b] - t).abs()).unwrap());
    idx.truncate(count);
    idx.sort_unstable();
    idx
}

/// `rho^{(k)}(t)` for `k = 1..=order` (order at most 4).
pub fn ambient_derivatives(c: &Curve, t: f64, order: usize) -> Result<Vec<HermitianOp>> {
    if order == 0 || order > MAX_ORDER {
        return Err(Error::InvalidArgument(format!("derivative order {order} outside 1..={MAX_ORDER}")));
    }
    match c {
        Curve::Schrodinger { h, .. } => {
            // (-i)^k ad_H^k rho
            let mut acc = c.rho_at(t)?.matrix().clone();
            let mut out = Vec::with_capacity(order);
            for _ in 0..order {
                acc = commutator(h.matrix(), &acc) * (-I);
                out.push(HermitianOp::hermitian_part(&acc));
            }
            Ok(out)
        }
        Curve::Geodesic { .. } => {
            let kets = c.ket_taylor(t, order)?;
            Ok((1..=order).map(|k| HermitianOp::hermitian_part(&leibniz_outer(&kets, k))).collect())
        }
        Curve::Sampled { times, states } => {
            let needed = 2 * order + 1;
            if times.len() < needed {
                return Err(Error::InsufficientSamples { needed, found: times.len() });
            }
            c.check_domain(t)?;
            let idx = nearest_nodes(times, t, (needed + 2).min(times.len()));
            let nodes: Vec<f64> = idx.iter().map(|&k| times[k]).collect();
            let vals: Vec<CMatrix> = idx.iter().map(|&k| states[k].projector().matrix().clone()).collect();
            Ok((1..=order).map(|k| HermitianOp::hermitian_part(&derivative_from_samples(t, &nodes, &vals, k))).collect())
        }
    }
}

/// `(|psi><psi|)^{(k)} = sum_j C(k, j) |psi^{(j)}><psi^{(k-j)}|`
fn leibniz_outer(kets: &[CVector], k: usize) -> CMatrix {
    let n = kets[0].len();
    let mut acc = CMatrix::zeros(n, n);
    let mut binom = 1.0;
    for j in 0..=k {
        acc += outer(&kets[j], &kets[k - j]) * re(binom);
        binom = binom * (k - j) as f64 / (j + 1) as f64;
    }
    acc
}

/// Velocity and its first three covariant derivatives at one point of a curve.
#[derive(Clone, Debug)]
pub struct CovariantJet {
    pub rho: ProjectorState,
    pub v: HermitianOp,
    pub alpha: HermitianOp,
    pub beta: HermitianOp,
    pub gamma: HermitianOp,
    /// `<psi'|psi'>` for the horizontal ket derivative.
    pub mu: f64,
    /// `g(v, v)`
    pub speed_sq: f64,
}

impl CovariantJet {
    /// Largest normal component among `v, alpha, beta, gamma`.
    pub fn tangency_residual(&self) -> f64 {
        [&self.v, &self.alpha, &self.beta, &self.gamma]
            .iter()
            .map(|x| crate::linalg::max_abs(&(x.matrix() - tangent_project_matrix(&self.rho, x.matrix()))))
            .fold(0.0, f64::max)
    }
}

/// Covariant jet from the ambient derivatives by differentiating the tangent
/// projector `P(X) = [rho, [rho, X]]` along the curve.
pub fn covariant_jet(c: &Curve, t: f64) -> Result<CovariantJet> {
    let rho = c.rho_at(t)?;
    let d = ambient_derivatives(c, t, 4)?;
    let r0 = rho.matrix();
    let (r1, r2, r3, r4) = (d[0].matrix(), d[1].matrix(), d[2].matrix(), d[3].matrix());
    let nest = |a: &CMatrix, b: &CMatrix, x: &CMatrix| commutator(a, &commutator(b, x));
    let p = |x: &CMatrix| nest(r0, r0, x);
    let pd = |x: &CMatrix| nest(r1, r0, x) + nest(r0, r1, x);
    let pdd = |x: &CMatrix| nest(r2, r0, x) + nest(r1, r1, x) * re(2.0) + nest(r0, r2, x);

    let alpha = p(r2);
    let alpha_dot = pd(r2) + p(r3);
    let beta = p(&alpha_dot);
    let alpha_ddot = pdd(r2) + pd(r3) * re(2.0) + p(r4);
    let gamma = p(&(pd(&alpha_dot) + p(&alpha_ddot)));

    let kets = c.ket_taylor(t, 1)?;
    let psi = &kets[0];
    let horizontal = &kets[1] - psi * psi.dotc(&kets[1]);
    let v = d[0].clone();
    let speed_sq = metric_g(&v, &v);
    Ok(CovariantJet {
        rho,
        v,
        alpha: HermitianOp::hermitian_part(&alpha),
        beta: HermitianOp::hermitian_part(&beta),
        gamma: HermitianOp::hermitian_part(&gamma),
        mu: horizontal.norm_squared(),
        speed_sq,
    })
}

/// `gamma` as the projected central difference of `beta` along the curve.
pub fn gamma_transported_fd(c: &Curve, t: f64, h: f64) -> Result<HermitianOp> {
    let rho = c.rho_at(t)?;
    // propagate evaluation errors by checking the stencil ends first
    covariant_jet(c, t - h)?;
    covariant_jet(c, t + h)?;
    let beta = |s: f64| covariant_jet(c, t + s).expect("checked above").beta.into_matrix();
    let db = central_richardson(&beta, 0.0, h);
    Ok(HermitianOp::hermitian_part(&tangent_project_matrix(&rho, &db)))
}

/// `|alpha|^2 = h4 - 4 h3 h1 - h2^2 + 8 h2 h1^2 - 4 h1^4`
pub fn accel_norm_sq(h: &HermitianOp, rho0: &ProjectorState) -> f64 {
    let m = expectation_powers(h, rho0, 4);
    m[4] - 4.0 * m[3] * m[1] - m[2] * m[2] + 8.0 * m[2] * m[1] * m[1] - 4.0 * m[1].powi(4)
}

/// `Tr(R H^2 r^2 H^2) / 2` with superoperators on row-major vectorized matrices.
pub fn accel_norm_sq_superop(h: &HermitianOp, rho0: &ProjectorState) -> f64 {
    let hh = adjoint_superop(h);
    let hh2 = hh.compose(&hh);
    let r = adjoint_superop(&HermitianOp::hermitian_part(rho0.matrix()));
    let r2 = r.compose(&r);
    let rr = density_superop(rho0);
    0.5 * rr.compose(&hh2).compose(&r2).compose(&hh2).matrix().trace().re
}

/// Same quantity with the projector superoperator in place of `r^2`.
pub fn accel_norm_sq_projected(h: &HermitianOp, rho0: &ProjectorState) -> f64 {
    let hh = adjoint_superop(h);
    let hh2 = hh.compose(&hh);
    let rr = density_superop(rho0);
    0.5 * rr.compose(&hh2).compose(&projector_superop(rho0)).compose(&hh2).matrix().trace().re
}

/// `G(alpha, alpha)` from the covariant jet of the Schrödinger curve at `t = 0`.
pub fn accel_norm_sq_jet(h: &HermitianOp, psi0: &PureState) -> Result<f64> {
    let jet = covariant_jet(&Curve::schrodinger(h.clone(), psi0.clone())?, 0.0)?;
    Ok(metric_g(&jet.alpha, &jet.alpha))
}

/// Squared curvature `|alpha|^2 / g(v, v)^2` of a Schrödinger curve from h-moments.
pub fn curvature_sq_moments(h: &HermitianOp, rho0: &ProjectorState) -> Result<f64> {
    let m = expectation_powers(h, rho0, 2);
    let speed_sq = m[2] - m[1] * m[1];
    if speed_sq <= 1e-14 {
        return Err(Error::InvalidArgument("stationary state: curvature undefined".into()));
    }
    Ok(accel_norm_sq(h, rho0) / (speed_sq * speed_sq))
}

/// Geodesic curvature `|alpha| / g(v, v)` at `t`.
pub fn curvature(c: &Curve, t: f64) -> Result<f64> {
    let jet = covariant_jet(c, t)?;
    if jet.speed_sq <= 1e-14 {
        return Err(Error::InvalidArgument("zero speed: curvature undefined".into()));
    }
    Ok(metric_g(&jet.alpha, &jet.alpha).max(0.0).sqrt() / jet.speed_sq)
}

/// Minimizing geodesic between two states.
#[derive(Clone, Debug)]
pub struct GeodesicSegment {
    /// Parametrized on `s in [0, 1]`.
    pub curve: Curve,
    pub length: f64,
    pub psi0: PureState,
    pub xi: PureState,
}

/// `|psi_s> = cos(L s)|psi_0> + sin(L s)|xi>` with `psi_0` phase-fixed so its
/// largest component is real positive and `<psi_0|psi_1>` real non-negative.
pub fn geodesic_between(rho0: &ProjectorState, rho1: &ProjectorState) -> Result<GeodesicSegment> {
    if rho0.dim() != rho1.dim() {
        return Err(Error::DimensionMismatch { expected: rho0.dim(), found: rho1.dim() });
    }
    let psi0 = rho0.ket();
    let psi1 = rho1.ket();
    let o = psi0.inner(&psi1);
    let fidelity = o.norm_sqr();
    if fidelity <= 1e-12 {
        return Err(Error::InvalidArgument("antipodal states: the geodesic direction is not unique".into()));
    }
    let aligned = psi1.amplitudes() * (o.conj() / o.norm());
    let cos_l = o.norm();
    let perp = aligned - psi0.amplitudes() * re(cos_l);
    let sin_l = perp.norm();
    if sin_l < 1e-14 {
        return Err(Error::InvalidArgument("coincident states: no geodesic direction".into()));
    }
    let xi = PureState::normalized(perp)?;
    let length = sin_l.atan2(cos_l);
    Ok(GeodesicSegment {
        curve: Curve::geodesic(psi0.clone(), xi.clone(), length)?,
        length,
        psi0,
        xi,
    })
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, max_abs};

    fn qubit_latitude(theta: f64) -> PureState {
        PureState::from_slice(&[re((theta / 2.0).cos()), re((theta / 2.0).sin())]).unwrap()
    }

    #[test]
    fn second_derivative_sigma_x() {
        let curve = Curve::schrodinger(HermitianOp::pauli_x(), PureState::basis(2, 0).unwrap()).unwrap();
        let d = ambient_derivatives(&curve, 0.0, 2).unwrap();
        let expected = CMatrix::from_row_slice(2, 2, &[re(-2.0), re(0.0), re(0.0), re(2.0)]);
        assert!(max_abs(&(d[1].matrix() - expected)) < 1e-14);
    }

    #[test]
    fn latitude_circle_curvature() {
        let h = HermitianOp::pauli_z().scale(1.0 / 2f64.sqrt());
        for theta in [0.3, 0.8, 1.2] {
            let curve = Curve::schrodinger(h.clone(), qubit_latitude(theta)).unwrap();
            let k = curvature(&curve, 0.4).unwrap();
            let oracle = 2.0 / theta.tan();
            assert!((k - oracle).abs() < 1e-10, "{k} vs {oracle}");
            let km = curvature_sq_moments(&h, &qubit_latitude(theta).projector()).unwrap().sqrt();
            assert!((km - oracle).abs() < 1e-10);
        }
        let eq = Curve::schrodinger(h, qubit_latitude(std::f64::consts::FRAC_PI_2)).unwrap();
        assert!(curvature(&eq, 0.0).unwrap() < 1e-12);
    }

    #[test]
    fn geodesic_jet_vanishes() {
        let psi0 = PureState::from_slice(&[c(0.6, 0.1), c(0.2, -0.3), c(0.1, 0.7)]).unwrap();
        let rho1 = PureState::from_slice(&[c(0.1, 0.2), c(0.9, 0.0), c(-0.3, 0.2)]).unwrap().projector();
        let seg = geodesic_between(&psi0.projector(), &rho1).unwrap();
        let jet = covariant_jet(&seg.curve, 0.3).unwrap();
        for x in [&jet.alpha, &jet.beta, &jet.gamma] {
            assert!(x.max_abs() < 1e-12);
        }
        let end = seg.curve.rho_at(1.0).unwrap();
        assert!(max_abs(&(end.matrix() - rho1.matrix())) < 1e-12);
    }

    #[test]
    fn orthogonal_states_are_quarter_turn_apart() {
        let a = PureState::basis(3, 0).unwrap().projector();
        let b = PureState::from_slice(&[re(0.0), re(1.0), c(0.0, 1.0)]).unwrap().projector();
        assert!(geodesic_between(&a, &b).is_err());
        let nearly = PureState::from_slice(&[re(1e-5), re(1.0), re(0.0)]).unwrap().projector();
        let seg = geodesic_between(&a, &nearly).unwrap();
        assert!((seg.length - std::f64::consts::FRAC_PI_2).abs() < 2e-5);
    }

    #[test]
    fn sampled_curve_rejects_outside_domain() {
        let s: Vec<PureState> = (0..5).map(|k| qubit_latitude(0.1 * k as f64)).collect();
        let curve = Curve::sampled(vec![0.0, 0.1, 0.2, 0.3, 0.4], s).unwrap();
        assert!(matches!(curve.state_at(0.5), Err(Error::OutOfDomain { .. })));
        assert!(matches!(ambient_derivatives(&curve, 0.2, 3), Err(Error::InsufficientSamples { needed: 7, found: 5 })));
    }
}
