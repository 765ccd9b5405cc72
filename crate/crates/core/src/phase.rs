//! Open-curve geometric phase `phi_t = arg Tr(rho_0 F_t)` with `F' = rho' F`,
//! its derivatives at `t = 0`, and the geodesic frame used to express them.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;

use crate::curves::{covariant_jet, Curve, CovariantJet};
use crate::error::{Error, Result};
use crate::fd::{central_richardson, derivative_from_samples};
use crate::geometry::{complex_structure_tangent, symplectic_omega, tangent_project_matrix};
use crate::linalg::{
    commutator, expectation_powers, metric_g, outer, re, CMatrix, CVector, HermitianOp, ProjectorState, PureState, C64, I,
};
use crate::series::{binomial, factorial, KetSeries};

/// `Tr(rho_0 F)` below this magnitude leaves the phase undefined.
pub const BREAKDOWN_TOL: f64 = 1e-10;
/// Convergence gate for step doubling.
pub const CONVERGENCE_TOL: f64 = 1e-8;
/// Step for finite differences of the geodesic frame in `t`.
pub const FRAME_STEP: f64 = 1e-4;
/// Nodes of the least-squares fit in [`vtilde_expansion`].
pub const VTILDE_GRID: [f64; 6] = [0.02, 0.04, 0.06, 0.08, 0.10, 0.12];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhaseMethod {
    Ode,
    Bargmann,
}

#[derive(Clone, Debug)]
pub struct PhaseTrace {
    pub times: Vec<f64>,
    /// Unwrapped phase on `times`.
    pub phase: Vec<f64>,
    pub f_final: CMatrix,
    pub method: PhaseMethod,
    /// Indices where `|Tr(rho_0 F)|` fell below [`BREAKDOWN_TOL`]; the phase there is NaN.
    pub undefined: Vec<usize>,
}

impl PhaseTrace {
    pub fn final_phase(&self) -> f64 {
        *self.phase.last().expect("trace is never empty")
    }

    pub fn is_defined(&self) -> bool {
        self.undefined.is_empty()
    }
}

fn nearest_branch(raw: f64, previous: f64) -> f64 {
    raw + 2.0 * PI * ((previous - raw) / (2.0 * PI)).round()
}

/// Integrates `F' = rho' F` by fixed-step RK4 from 0 to `t_end` (which may be negative).
pub fn geometric_phase(c: &Curve, t_end: f64, steps: usize) -> Result<PhaseTrace> {
    if steps < 16 {
        return Err(Error::InvalidArgument(format!("need at least 16 steps, got {steps}")));
    }
    let rho0 = c.rho_at(0.0)?;
    c.rho_at(t_end)?;
    let n = c.dim();
    let dt = t_end / steps as f64;
    let rho_dot = |t: f64| -> Result<CMatrix> { Ok(crate::curves::ambient_derivatives(c, t, 1)?[0].matrix().clone()) };
    let mut f = CMatrix::identity(n, n);
    let mut times = Vec::with_capacity(steps + 1);
    let mut phase = Vec::with_capacity(steps + 1);
    let mut undefined = Vec::new();
    times.push(0.0);
    phase.push(0.0);
    let mut last = 0.0;
    for k in 0..steps {
        let t = k as f64 * dt;
        let k1 = rho_dot(t)? * &f;
        let mid = rho_dot(t + 0.5 * dt)?;
        let k2 = &mid * (&f + &k1 * re(0.5 * dt));
        let k3 = &mid * (&f + &k2 * re(0.5 * dt));
        let k4 = rho_dot(t + dt)? * (&f + &k3 * re(dt));
        f += (k1 + k2 * re(2.0) + k3 * re(2.0) + k4) * re(dt / 6.0);
        let tr = rho0.expectation(&f);
        times.push((k + 1) as f64 * dt);
        if tr.norm() < BREAKDOWN_TOL {
            undefined.push(k + 1);
            phase.push(f64::NAN);
        } else {
            last = nearest_branch(tr.arg(), last);
            phase.push(last);
        }
    }
    Ok(PhaseTrace { times, phase, f_final: f, method: PhaseMethod::Ode, undefined })
}

/// [`geometric_phase`] with step doubling until the final phase changes by
/// less than [`CONVERGENCE_TOL`].
pub fn geometric_phase_converged(c: &Curve, t_end: f64, steps: usize) -> Result<PhaseTrace> {
    let mut steps = steps.max(16);
    let mut prev = geometric_phase(c, t_end, steps)?;
    for _ in 0..14 {
        steps *= 2;
        let next = geometric_phase(c, t_end, steps)?;
        if !next.is_defined() {
            return Ok(next);
        }
        let change = (next.final_phase() - prev.final_phase()).abs();
        if change < CONVERGENCE_TOL {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::NotConverged { change: f64::NAN, steps })
}

/// Discrete phase `-arg(<psi_0|psi_1> ... <psi_{N-1}|psi_N>)`, with the closing
/// factor `<psi_N|psi_0>` appended unless `closed` says the list already returns
/// to its start. The sign matches [`geometric_phase`].
pub fn bargmann_phase(states: &[PureState], closed: bool) -> Result<f64> {
    if states.len() < 2 {
        return Err(Error::InsufficientSamples { needed: 2, found: states.len() });
    }
    let mut prod = C64::new(1.0, 0.0);
    let mut links: Vec<(usize, usize)> = (0..states.len() - 1).map(|k| (k, k + 1)).collect();
    if !closed {
        links.push((states.len() - 1, 0));
    }
    for (a, b) in links {
        let o = states[a].inner(&states[b]);
        if o.norm() < 1e-12 {
            return Err(Error::ZeroOverlap { index: a });
        }
        // renormalize each factor to keep long chains in range
        prod *= o / o.norm();
    }
    Ok(-prod.arg())
}

/// Exact phase of a Schrödinger curve: `arg<psi_0|psi_t> + t <H>`.
pub fn schrodinger_phase(h: &HermitianOp, psi0: &PureState, t: f64) -> Result<f64> {
    let psi_t = crate::linalg::evolve(h, t, psi0)?;
    let h1 = expectation_powers(h, &psi0.projector(), 1)[1];
    let raw = psi0.inner(&psi_t).arg() + t * h1;
    Ok(nearest_branch(raw, 0.0))
}

/// Derivatives of the phase at `t = 0`, keyed by order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhaseDerivatives {
    pub values: BTreeMap<u32, f64>,
}

impl PhaseDerivatives {
    pub fn get(&self, order: u32) -> Option<f64> {
        self.values.get(&order).copied()
    }

    fn insert(&mut self, order: u32, value: f64) {
        self.values.insert(order, value);
    }
}

/// Orders 3 to 5 from the covariant jet at `t = 0`:
/// `omega(alpha, v)`, `2 omega(beta, v)` and
/// `3 omega(gamma, v) + 2 omega(beta, alpha) + 8 g(v, v) omega(alpha, v)`.
pub fn phase_derivs_covariant(j: &CovariantJet) -> PhaseDerivatives {
    let w = |x: &HermitianOp, y: &HermitianOp| symplectic_omega(&j.rho, x, y);
    let mut out = PhaseDerivatives::default();
    out.insert(3, w(&j.alpha, &j.v));
    out.insert(4, 2.0 * w(&j.beta, &j.v));
    out.insert(5, 3.0 * w(&j.gamma, &j.v) + 2.0 * w(&j.beta, &j.alpha) + 8.0 * j.speed_sq * w(&j.alpha, &j.v));
    out
}

/// `h3 - 3 h2 h1 + 2 h1^3`
pub fn schrodinger_d3(h: &HermitianOp, rho0: &ProjectorState) -> f64 {
    let m = expectation_powers(h, rho0, 3);
    m[3] - 3.0 * m[2] * m[1] + 2.0 * m[1].powi(3)
}

/// Finite-difference derivatives of the integrated phase at `t = 0` on the
/// stencil `k h`, `|k| <= half`, with `substeps` RK4 steps per stencil spacing.
pub fn phase_derivs_fd(c: &Curve, h: f64, half: usize, substeps: usize, max_order: u32) -> Result<PhaseDerivatives> {
    if half == 0 || (2 * half) < max_order as usize {
        return Err(Error::InsufficientSamples { needed: max_order as usize + 1, found: 2 * half + 1 });
    }
    let steps = (half * substeps).max(16);
    let stride = steps / half;
    let steps = stride * half;
    let fwd = geometric_phase(c, h * half as f64, steps)?;
    let bwd = geometric_phase(c, -h * half as f64, steps)?;
    if !fwd.is_defined() || !bwd.is_defined() {
        return Err(Error::InvalidArgument("phase undefined on the stencil".into()));
    }
    let mut nodes = Vec::with_capacity(2 * half + 1);
    let mut values = Vec::with_capacity(2 * half + 1);
    for k in (1..=half).rev() {
        nodes.push(bwd.times[k * stride]);
        values.push(bwd.phase[k * stride]);
    }
    nodes.push(0.0);
    values.push(0.0);
    for k in 1..=half {
        nodes.push(fwd.times[k * stride]);
        values.push(fwd.phase[k * stride]);
    }
    let mut out = PhaseDerivatives::default();
    for order in 1..=max_order {
        out.insert(order, derivative_from_samples(0.0, &nodes, &values, order as usize));
    }
    Ok(out)
}

/// Geodesic from `rho_0` to `rho_t` and the unitary family moving along it.
#[derive(Clone, Debug)]
pub struct GeodesicFrame {
    pub t: f64,
    /// `L_t`
    pub length: f64,
    pub psi0: PureState,
    /// `|xi_t>`, in the gauge `<psi_0|psi_t> >= 0`.
    pub xi: PureState,
    /// `chi_t = i(|xi><psi_0| - |psi_0><xi|)`
    pub chi: HermitianOp,
    /// `Y_t = L chi`
    pub y: HermitianOp,
    /// `Y~_t = sin(L) chi`
    pub y_tilde: HermitianOp,
    /// `b_t = <xi|xi'>`
    pub b: C64,
    pub length_dot: f64,
    pub chi_dot: CMatrix,
}

struct FrameCore {
    psi0: CVector,
    length: f64,
    xi: CVector,
}

fn frame_core(c: &Curve, t: f64) -> Result<FrameCore> {
    let psi0 = c.state_at(0.0)?.into_amplitudes();
    let psi_t = c.state_at(t)?.into_amplitudes();
    let o = psi0.dotc(&psi_t);
    let aligned = if o.norm() > 0.0 { &psi_t * (o.conj() / o.norm()) } else { psi_t };
    let cos_l = o.norm();
    let perp = &aligned - &psi0 * re(cos_l);
    let sin_l = perp.norm();
    let length = sin_l.atan2(cos_l);
    if !(length > 1e-12 && length < FRAC_PI_2 - 1e-12) {
        return Err(Error::FrameWindow { length });
    }
    Ok(FrameCore { psi0, length, xi: perp.unscale(sin_l) })
}

fn chi_from(xi: &CVector, psi0: &CVector) -> CMatrix {
    (outer(xi, psi0) - outer(psi0, xi)) * I
}

/// Builds the frame at `t`; `b`, `L'` and `chi'` come from Richardson
/// extrapolated central differences with step [`FRAME_STEP`].
pub fn geodesic_frame(c: &Curve, t: f64) -> Result<GeodesicFrame> {
    let core = frame_core(c, t)?;
    frame_core(c, t - FRAME_STEP)?;
    frame_core(c, t + FRAME_STEP)?;
    let xi_of = |s: f64| frame_core(c, s).expect("checked").xi;
    let len_of = |s: f64| frame_core(c, s).expect("checked").length;
    let xi_dot: CVector = central_richardson(&xi_of, t, 0.5 * FRAME_STEP);
    let length_dot = central_richardson(&len_of, t, 0.5 * FRAME_STEP);
    let chi = chi_from(&core.xi, &core.psi0);
    let chi_dot = chi_from(&xi_dot, &core.psi0);
    let chi_h = HermitianOp::hermitian_part(&chi);
    Ok(GeodesicFrame {
        t,
        length: core.length,
        psi0: PureState::new(core.psi0.clone()).or_else(|_| PureState::normalized(core.psi0.clone()))?,
        xi: PureState::normalized(core.xi.clone())?,
        y: chi_h.scale(core.length),
        y_tilde: chi_h.scale(core.length.sin()),
        chi: chi_h,
        b: core.xi.dotc(&xi_dot),
        length_dot,
        chi_dot,
    })
}

impl GeodesicFrame {
    fn chi2(&self) -> CMatrix {
        self.chi.matrix() * self.chi.matrix()
    }

    /// `U_s = exp(-i s L chi) = I - i sin(Ls) chi + (cos(Ls) - 1) chi^2`
    pub fn u(&self, s: f64) -> CMatrix {
        let n = self.psi0.dim();
        let (sn, cs) = (self.length * s).sin_cos();
        CMatrix::identity(n, n) - self.chi.matrix() * (I * sn) + self.chi2() * re(cs - 1.0)
    }

    /// `d U_s / dt`
    pub fn u_dot(&self, s: f64) -> CMatrix {
        let (sn, cs) = (self.length * s).sin_cos();
        let chi = self.chi.matrix();
        let ld = s * self.length_dot;
        chi * (-I * cs * ld) - &self.chi_dot * (I * sn) - self.chi2() * re(sn * ld)
            + (&self.chi_dot * chi + chi * &self.chi_dot) * re(cs - 1.0)
    }

    /// `X_{ts} = i U^{-1} dU/dt`
    pub fn x(&self, s: f64) -> HermitianOp {
        HermitianOp::hermitian_part(&(self.u(s).adjoint() * self.u_dot(s) * I))
    }

    /// `X^_{ts} = i dU/dt U^{-1}`
    pub fn x_hat(&self, s: f64) -> HermitianOp {
        HermitianOp::hermitian_part(&(self.u_dot(s) * self.u(s).adjoint() * I))
    }

    /// `Y^_t = i U' U^{-1}`, equal to `Y_t` since `U` is a one-parameter group in `s`.
    pub fn y_hat(&self) -> HermitianOp {
        self.y.clone()
    }

    /// `Tr(rho_0 [X_{ts}, Y_t])`
    pub fn trace_commutator(&self, s: f64) -> C64 {
        let rho0 = self.psi0.projector();
        rho0.expectation(&commutator(self.x(s).matrix(), self.y.matrix()))
    }

    /// `-L b sin(2 L s)`
    pub fn trace_commutator_closed_form(&self, s: f64) -> C64 {
        -self.b * (self.length * (2.0 * self.length * s).sin())
    }

    /// `d phi / dt = i b sin^2 L`
    pub fn phase_rate(&self) -> f64 {
        (I * self.b * self.length.sin().powi(2)).re
    }

    /// `(i/2) b sin^2 L`, half of [`GeodesicFrame::phase_rate`].
    pub fn phase_rate_half(&self) -> f64 {
        0.5 * self.phase_rate()
    }

    /// `sigma = |xi><xi|`
    pub fn sigma(&self) -> CMatrix {
        outer(self.xi.amplitudes(), self.xi.amplitudes())
    }

    /// `tau = |xi><psi_0| + |psi_0><xi|`
    pub fn tau(&self) -> CMatrix {
        outer(self.xi.amplitudes(), self.psi0.amplitudes()) + outer(self.psi0.amplitudes(), self.xi.amplitudes())
    }

    /// `-J Y_t = L tau`, the inverse exponential map of `rho_t` at `rho_0`.
    pub fn log_map(&self) -> HermitianOp {
        HermitianOp::hermitian_part(&(self.tau() * re(self.length)))
    }
}

/// Coefficients `v~^{(n)}`, `n = 0..=K`, of `-J Y_t = sum_n v~^{(n-1)} t^n / n!`.
#[derive(Clone, Debug)]
pub struct VTildeExpansion {
    pub rho0: ProjectorState,
    pub vtilde: Vec<HermitianOp>,
}

impl VTildeExpansion {
    pub fn order(&self) -> usize {
        self.vtilde.len() - 1
    }
}

/// Series of `-J Y_t` computed exactly from the ket Taylor coefficients.
/// Returns the matrix coefficients `M_n` of `t^n`, `n = 0..=order`.
fn log_map_series(c: &Curve, order: usize) -> Result<(CVector, Vec<CMatrix>, Vec<CMatrix>)> {
    let kets = c.ket_taylor(0.0, order)?;
    let psi0 = kets[0].clone();
    let ps = KetSeries::from_derivatives(&kets);
    let o = KetSeries::inner_fixed(&psi0, &ps);
    let cc = o.mul(&o.conj()).sqrt();
    let gauge = o.conj().mul(&cc.recip());
    let p = ps.scale(&gauge);
    let perp = p.sub_fixed(&cc, &psi0);
    let w = perp.inner(&perp).mul(&cc.mul(&cc).recip());
    // arctan(sqrt w)/sqrt w
    let f: Vec<C64> = (0..=order).map(|k| re(if k % 2 == 0 { 1.0 } else { -1.0 } / (2 * k + 1) as f64)).collect();
    let coef = cc.recip().mul(&w.compose(&f));
    let log_map = perp.scale(&coef).symmetric_outer(&psi0);
    let tau_sin = perp.symmetric_outer(&psi0);
    Ok((psi0, log_map, tau_sin))
}

/// Exact `v~` expansion by power-series arithmetic on the ket Taylor series.
pub fn vtilde_series(c: &Curve, k: usize) -> Result<VTildeExpansion> {
    let (psi0, m, _) = log_map_series(c, k + 1)?;
    let rho0 = PureState::normalized(psi0)?.projector();
    let vtilde = (1..=k + 1).map(|n| HermitianOp::hermitian_part(&(&m[n] * re(factorial(n))))).collect();
    Ok(VTildeExpansion { rho0, vtilde })
}

/// `v~` expansion by least-squares fit of `-J Y_t` on [`VTILDE_GRID`] with a
/// polynomial of degree `K + 1` and no constant term.
pub fn vtilde_expansion(c: &Curve, k: usize) -> Result<VTildeExpansion> {
    if k > 4 {
        return Err(Error::InvalidArgument(format!("expansion order {k} exceeds 4")));
    }
    let cols = k + 1;
    if VTILDE_GRID.len() < cols {
        return Err(Error::RankDeficient(format!("{} nodes for {cols} coefficients", VTILDE_GRID.len())));
    }
    let vander = DMatrix::<f64>::from_fn(VTILDE_GRID.len(), cols, |i, j| VTILDE_GRID[i].powi(j as i32 + 1));
    let svd = vander.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-14 * smax) {
        return Err(Error::RankDeficient(format!("condition number {:.3e}", smax / smin)));
    }
    let pinv = svd.pseudo_inverse(0.0).map_err(|e| Error::RankDeficient(e.to_string()))?;
    let samples: Vec<CMatrix> = VTILDE_GRID
        .iter()
        .map(|&t| geodesic_frame_log_map(c, t))
        .collect::<Result<_>>()?;
    let rho0 = c.rho_at(0.0)?;
    let n = c.dim();
    let vtilde = (0..cols)
        .map(|j| {
            let coeff = samples.iter().enumerate().fold(CMatrix::zeros(n, n), |acc, (i, m)| acc + m * re(pinv[(j, i)]));
            HermitianOp::hermitian_part(&tangent_project_matrix(&rho0, &(coeff * re(factorial(j + 1)))))
        })
        .collect();
    Ok(VTildeExpansion { rho0, vtilde })
}

fn geodesic_frame_log_map(c: &Curve, t: f64) -> Result<CMatrix> {
    let core = frame_core(c, t)?;
    Ok((outer(&core.xi, &core.psi0) + outer(&core.psi0, &core.xi)) * re(core.length))
}

/// Orders 1 to `min(K + 2, 6)` from the `v~` coefficients.
pub fn phase_derivs_vtilde(e: &VTildeExpansion) -> PhaseDerivatives {
    let v = &e.vtilde;
    let w = |a: usize, b: usize| symplectic_omega(&e.rho0, &v[a], &v[b]);
    let g = |a: usize, b: usize| metric_g(&v[a], &v[b]);
    let mut out = PhaseDerivatives::default();
    out.insert(1, 0.0);
    out.insert(2, 0.0);
    let k = e.order();
    if k >= 1 {
        out.insert(3, w(1, 0));
    }
    if k >= 2 {
        out.insert(4, 2.0 * w(2, 0));
    }
    if k >= 3 {
        out.insert(5, 3.0 * w(3, 0) + 2.0 * w(2, 1) - 4.0 * g(0, 0) * w(1, 0));
    }
    if k >= 4 {
        out.insert(6, 4.0 * w(4, 0) + 5.0 * w(3, 1) - 40.0 / 3.0 * g(0, 0) * w(2, 0) - 20.0 * g(1, 0) * w(1, 0));
    }
    out
}

/// `v, nabla v, nabla^2 v, nabla^3 v` from the `v~` coefficients (needs `K >= 3`).
pub fn nabla_from_vtilde(e: &VTildeExpansion) -> Result<[HermitianOp; 4]> {
    if e.order() < 3 {
        return Err(Error::InvalidArgument("need v~ up to order 3".into()));
    }
    let v = &e.vtilde;
    let jv0 = complex_structure_tangent(&e.rho0, &v[0]);
    let g10 = metric_g(&v[1], &v[0]);
    let g00 = metric_g(&v[0], &v[0]);
    let w10 = symplectic_omega(&e.rho0, &v[1], &v[0]);
    let third = &(&(&v[3] + &v[0].scale(g10)) + &jv0.scale(3.0 * w10)) - &v[1].scale(g00);
    Ok([v[0].clone(), v[1].clone(), v[2].clone(), third])
}

/// Phase derivatives up to `max_order` from
/// `phi^{(k+1)} = -sum_r C(k, r) omega(Y~^{(r)}, Y~^{(k-r+1)})`,
/// with the `Y~` series computed exactly.
pub fn phase_derivs_frame_series(c: &Curve, max_order: usize) -> Result<PhaseDerivatives> {
    let (psi0, _, tau_sin) = log_map_series(c, max_order)?;
    let rho0 = PureState::normalized(psi0)?.projector();
    // -J Y~ = sin(L) tau; omega is J-invariant
    let d: Vec<HermitianOp> =
        tau_sin.iter().enumerate().map(|(n, m)| HermitianOp::hermitian_part(&(m * re(factorial(n))))).collect();
    let mut out = PhaseDerivatives::default();
    for k in 0..max_order {
        let s: f64 = (0..=k).map(|r| binomial(k, r) * symplectic_omega(&rho0, &d[r], &d[k - r + 1])).sum();
        out.insert(k as u32 + 1, -s);
    }
    Ok(out)
}

/// Covariant-route derivatives straight from a curve.
pub fn phase_derivs_from_curve(c: &Curve) -> Result<PhaseDerivatives> {
    Ok(phase_derivs_covariant(&covariant_jet(c, 0.0)?))
}
