//! Majorana stellar representation of spin-`s` states.
//!
//! A state `psi = (psi_0, ..., psi_2s)` in the `S_z` basis `m = s, s-1, ..., -s`
//! has the polynomial
//!
//! `P(zeta) = sum_k (-1)^k sqrt(C(2s, k)) psi_k zeta^(2s-k)`
//!
//! whose roots are sent to the sphere by `zeta = tan(theta/2) e^{i phi}`.
//! Note the orientation: `zeta = 0` is the north pole, so the coherent state
//! `e_0` has all `2s` stars there, and every degree lost by a vanishing
//! leading coefficient is a star at the south pole.

use nalgebra::{Matrix3xX, Schur};
use rayon::prelude::*;

use crate::brachistophase::{canonical_brachistophase, canonical_max_accel, Sign};
use crate::error::{Error, Result};
use crate::linalg::{evolve, re, CMatrix, CVector, HermitianOp, PureState, C64, I};
use crate::series::binomial;

/// Unit vector on the sphere.
pub type Star = [f64; 3];

/// Relative size below which a polynomial coefficient counts as zero.
const COEFF_ZERO: f64 = 1e-14;
/// Largest angle a matched star may move between two trajectory nodes.
pub const STEP_CAP: f64 = 0.2;
/// Bisection depth of the trajectory grid refinement.
const MAX_REFINE_DEPTH: u32 = 16;

#[derive(Clone, Debug)]
pub struct MajoranaConstellation {
    pub two_s: usize,
    /// Finite roots with multiplicity; zeros first.
    pub roots: Vec<C64>,
    /// Roots at infinity (south-pole stars).
    pub infinity: usize,
    /// `roots` mapped to the sphere, followed by the south-pole stars.
    pub stars: Vec<Star>,
}

impl MajoranaConstellation {
    pub fn star_count(&self) -> usize {
        self.stars.len()
    }
}

fn check_spin(two_s: usize, dim: usize) -> Result<()> {
    if two_s == 0 {
        return Err(Error::DimensionTooSmall(dim));
    }
    Ok(())
}

/// Coefficients of `P`, highest power first: entry `k` multiplies `zeta^(2s-k)`.
pub fn majorana_polynomial(psi: &PureState) -> Vec<C64> {
    let two_s = psi.dim() - 1;
    psi.amplitudes()
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            a * (sign * binomial(two_s, k).sqrt())
        })
        .collect()
}

/// Inverse of [`majorana_polynomial`]; the result is normalized.
pub fn state_from_polynomial(coeffs: &[C64]) -> Result<PureState> {
    let two_s = coeffs.len().saturating_sub(1);
    check_spin(two_s, coeffs.len())?;
    let amps = CVector::from_fn(coeffs.len(), |k, _| {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        coeffs[k] / (sign * binomial(two_s, k).sqrt())
    });
    PureState::normalized(amps).map_err(|_| Error::ZeroPolynomial)
}

fn horner(coeffs: &[C64], z: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for &a in coeffs {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

/// Roots of a polynomial given highest power first, plus the number of roots
/// at infinity implied by vanishing leading coefficients.
///
/// Exact zero roots are factored out; the rest are eigenvalues of the companion
/// matrix, each refined by one Newton step.
pub fn polynomial_roots(coeffs: &[C64]) -> Result<(Vec<C64>, usize)> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Err(Error::ZeroPolynomial);
    }
    let is_zero = |c: &C64| c.norm() <= COEFF_ZERO * scale;
    let infinity = coeffs.iter().take_while(|c| is_zero(c)).count();
    let zeros = coeffs.iter().rev().take_while(|c| is_zero(c)).count();
    let core: Vec<C64> = coeffs[infinity..coeffs.len() - zeros].to_vec();
    let mut roots = vec![C64::new(0.0, 0.0); zeros];
    let degree = core.len() - 1;
    if degree == 1 {
        roots.push(-core[1] / core[0]);
    } else if degree > 1 {
        let mut companion = CMatrix::zeros(degree, degree);
        for j in 0..degree {
            companion[(0, j)] = -core[j + 1] / core[0];
        }
        for i in 1..degree {
            companion[(i, i - 1)] = re(1.0);
        }
        let schur = Schur::try_new(companion, 1e-15, 100_000)
            .ok_or_else(|| Error::NotConverged { change: f64::NAN, steps: 100_000 })?;
        let (_, t) = schur.unpack();
        for k in 0..degree {
            let mut z = t[(k, k)];
            let (p, dp) = horner(&core, z);
            if dp.norm() > 0.0 {
                let candidate = z - p / dp;
                if horner(&core, candidate).0.norm() < p.norm() {
                    z = candidate;
                }
            }
            roots.push(z);
        }
    }
    Ok((roots, infinity))
}

/// Inverse stereographic image of a root, `zeta = 0` at the north pole.
pub fn star_from_root(z: C64) -> Star {
    let r2 = z.norm_sqr();
    let d = 1.0 + r2;
    [2.0 * z.re / d, 2.0 * z.im / d, (1.0 - r2) / d]
}

/// Root of a star; `None` for the south pole.
pub fn root_from_star(star: &Star) -> Option<C64> {
    let denom = 1.0 + star[2];
    if denom <= 1e-14 {
        None
    } else {
        Some(C64::new(star[0], star[1]) / denom)
    }
}

pub const SOUTH_POLE: Star = [0.0, 0.0, -1.0];

pub fn constellation(psi: &PureState) -> Result<MajoranaConstellation> {
    let two_s = psi.dim() - 1;
    check_spin(two_s, psi.dim())?;
    let (roots, infinity) = polynomial_roots(&majorana_polynomial(psi))?;
    let mut stars: Vec<Star> = roots.iter().map(|&z| star_from_root(z)).collect();
    stars.extend(std::iter::repeat(SOUTH_POLE).take(infinity));
    Ok(MajoranaConstellation { two_s, roots, infinity, stars })
}

/// Polynomial with the given finite roots and south-pole count, highest power first.
pub fn polynomial_from_roots(two_s: usize, roots: &[C64], infinity: usize) -> Result<Vec<C64>> {
    if roots.len() + infinity != two_s {
        return Err(Error::DimensionMismatch { expected: two_s, found: roots.len() + infinity });
    }
    let mut poly = vec![re(1.0)];
    for &r in roots {
        let mut next = vec![C64::new(0.0, 0.0); poly.len() + 1];
        for (k, &a) in poly.iter().enumerate() {
            next[k] += a;
            next[k + 1] -= a * r;
        }
        poly = next;
    }
    let mut out = vec![C64::new(0.0, 0.0); infinity];
    out.extend(poly);
    Ok(out)
}

/// State (up to phase) whose constellation is `stars`.
pub fn state_from_constellation(stars: &[Star]) -> Result<PureState> {
    let mut roots = Vec::new();
    let mut infinity = 0;
    for s in stars {
        match root_from_star(s) {
            Some(z) => roots.push(z),
            None => infinity += 1,
        }
    }
    state_from_polynomial(&polynomial_from_roots(stars.len(), &roots, infinity)?)
}

/// Distance between the state's polynomial and the one rebuilt from its
/// roots, after the best overall rescaling, relative to the polynomial norm.
pub fn reconstruction_residual(psi: &PureState, c: &MajoranaConstellation) -> Result<f64> {
    let p = majorana_polynomial(psi);
    let q = polynomial_from_roots(c.two_s, &c.roots, c.infinity)?;
    let qq: f64 = q.iter().map(|x| x.norm_sqr()).sum();
    let qp: C64 = q.iter().zip(&p).map(|(a, b)| a.conj() * b).sum();
    let lambda = qp / qq;
    let num: f64 = q.iter().zip(&p).map(|(a, b)| (b - a * lambda).norm_sqr()).sum();
    let den: f64 = p.iter().map(|x| x.norm_sqr()).sum();
    Ok((num / den).sqrt())
}

/// `S_x, S_y, S_z` in the basis `m = s, s-1, ..., -s`.
pub fn spin_matrices(two_s: usize) -> [HermitianOp; 3] {
    let n = two_s + 1;
    let s = two_s as f64 / 2.0;
    let mut plus = CMatrix::zeros(n, n);
    for k in 1..n {
        // S_+ |m> with m = s - k raises to index k - 1.
        let m = s - k as f64;
        plus[(k - 1, k)] = re((s * (s + 1.0) - m * (m + 1.0)).sqrt());
    }
    let minus = plus.adjoint();
    let sx = (&plus + &minus) * re(0.5);
    let sy = (&plus - &minus) * (-0.5 * I);
    let sz = CMatrix::from_fn(n, n, |i, j| if i == j { re(s - i as f64) } else { re(0.0) });
    [HermitianOp::hermitian_part(&sx), HermitianOp::hermitian_part(&sy), HermitianOp::hermitian_part(&sz)]
}

/// Angle between two unit vectors.
pub fn angle(a: &Star, b: &Star) -> f64 {
    let cross = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    let sin = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    let cos = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    sin.atan2(cos)
}

/// Rotation of `v` by `theta` about the unit `axis` (right-handed).
pub fn rotate(v: &Star, axis: &Star, theta: f64) -> Star {
    let (s, c) = theta.sin_cos();
    let dot = axis[0] * v[0] + axis[1] * v[1] + axis[2] * v[2];
    let cross = [axis[1] * v[2] - axis[2] * v[1], axis[2] * v[0] - axis[0] * v[2], axis[0] * v[1] - axis[1] * v[0]];
    std::array::from_fn(|i| v[i] * c + cross[i] * s + axis[i] * dot * (1.0 - c))
}

/// Largest angle between two star multisets under the best one-to-one pairing
/// found greedily.
pub fn constellation_distance(a: &[Star], b: &[Star]) -> f64 {
    let (_, step) = greedy_match(a, b);
    step
}

/// Greedy nearest-pair matching: `out[i]` is the index in `b` paired with `a[i]`.
fn greedy_match(a: &[Star], b: &[Star]) -> (Vec<usize>, f64) {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            pairs.push((angle(x, y), i, j));
        }
    }
    pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap().then(p.1.cmp(&q.1)).then(p.2.cmp(&q.2)));
    let mut out = vec![usize::MAX; a.len()];
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for (d, i, j) in pairs {
        if out[i] == usize::MAX && !used[j] {
            out[i] = j;
            used[j] = true;
            worst = worst.max(d);
        }
    }
    (out, worst)
}

/// A step where no refinement brought every star under [`STEP_CAP`].
#[derive(Clone, Debug, PartialEq)]
pub struct Merge {
    pub t_from: f64,
    pub t_to: f64,
    pub step: f64,
}

#[derive(Clone, Debug)]
pub struct StarTrajectory {
    /// Requested nodes plus those inserted by bisection, in order.
    pub times: Vec<f64>,
    /// `tracks[star][node]`
    pub tracks: Vec<Vec<Star>>,
    /// Position of each requested grid node in `times`.
    pub grid_nodes: Vec<usize>,
    /// Number of nodes inserted by bisection.
    pub refinements: usize,
    pub merges: Vec<Merge>,
    /// `Some(p)` when the last frame is the first one with the stars
    /// relabelled: track `i` ends where star `p[i]` started.
    pub final_permutation: Option<Vec<usize>>,
}

impl StarTrajectory {
    pub fn star_count(&self) -> usize {
        self.tracks.len()
    }

    /// Largest angle covered by any track between consecutive nodes.
    pub fn max_step(&self) -> f64 {
        self.tracks
            .iter()
            .flat_map(|tr| tr.windows(2).map(|w| angle(&w[0], &w[1])))
            .fold(0.0, f64::max)
    }

    /// Tracks staying within `tol` of their first point.
    pub fn stationary_tracks(&self, tol: f64) -> Vec<usize> {
        (0..self.tracks.len())
            .filter(|&i| self.tracks[i].iter().all(|p| angle(p, &self.tracks[i][0]) <= tol))
            .collect()
    }

    pub fn frame(&self, node: usize) -> Vec<Star> {
        self.tracks.iter().map(|tr| tr[node]).collect()
    }

    /// Frame at the `k`-th requested grid node.
    pub fn grid_frame(&self, k: usize) -> Vec<Star> {
        self.frame(self.grid_nodes[k])
    }
}

struct Matcher<'a> {
    h: &'a HermitianOp,
    psi0: &'a PureState,
    merges: Vec<Merge>,
    times: Vec<f64>,
    frames: Vec<Vec<Star>>,
}

impl Matcher<'_> {
    fn stars_at(&self, t: f64) -> Result<Vec<Star>> {
        Ok(constellation(&evolve(self.h, t, self.psi0)?)?.stars)
    }

    fn advance(&mut self, prev: &[Star], t_a: f64, t_b: f64, next: Option<Vec<Star>>, depth: u32) -> Result<Vec<Star>> {
        let next = match next {
            Some(n) => n,
            None => self.stars_at(t_b)?,
        };
        let (pairing, step) = greedy_match(prev, &next);
        if step > STEP_CAP {
            if depth < MAX_REFINE_DEPTH {
                let mid = 0.5 * (t_a + t_b);
                let at_mid = self.advance(prev, t_a, mid, None, depth + 1)?;
                return self.advance(&at_mid, mid, t_b, Some(next), depth + 1);
            }
            self.merges.push(Merge { t_from: t_a, t_to: t_b, step });
        }
        let matched: Vec<Star> = pairing.into_iter().map(|j| next[j]).collect();
        self.times.push(t_b);
        self.frames.push(matched.clone());
        Ok(matched)
    }
}

/// Star tracks of `e^{-itH} psi0` over a strictly monotone grid.
pub fn trajectory(h: &HermitianOp, psi0: &PureState, grid: &[f64]) -> Result<StarTrajectory> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty time grid".into()));
    }
    if h.dim() != psi0.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: psi0.dim() });
    }
    let increasing = grid.windows(2).all(|w| w[1] > w[0]);
    let decreasing = grid.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) {
        return Err(Error::InvalidArgument("time grid must be strictly monotone".into()));
    }
    let frames: Vec<Vec<Star>> = grid
        .par_iter()
        .map(|&t| Ok(constellation(&evolve(h, t, psi0)?)?.stars))
        .collect::<Result<_>>()?;
    let mut matcher = Matcher { h, psi0, merges: Vec::new(), times: vec![grid[0]], frames: vec![frames[0].clone()] };
    let mut current = frames[0].clone();
    let mut grid_nodes = vec![0];
    for k in 1..grid.len() {
        current = matcher.advance(&current, grid[k - 1], grid[k], Some(frames[k].clone()), 0)?;
        grid_nodes.push(matcher.times.len() - 1);
    }
    let tracks: Vec<Vec<Star>> =
        (0..current.len()).map(|i| matcher.frames.iter().map(|f| f[i]).collect()).collect();
    let final_permutation = if grid.len() > 1 {
        let (pairing, step) = greedy_match(&current, &frames[0]);
        (step <= STEP_CAP).then_some(pairing)
    } else {
        None
    };
    Ok(StarTrajectory {
        refinements: matcher.times.len() - grid.len(),
        times: matcher.times,
        tracks,
        grid_nodes,
        merges: matcher.merges,
        final_permutation,
    })
}

/// Closed-form root of the falling star, `2 sqrt(s) / (-sigma + i sqrt(3) cot t)`.
pub fn falling_star_root(two_s: usize, sign: Sign, t: f64) -> C64 {
    let s = two_s as f64 / 2.0;
    re(2.0 * s.sqrt()) / C64::new(-sign.value(), 3f64.sqrt() / t.tan())
}

/// Polar angle of the normal of the least-squares plane through `points`.
pub fn plane_tilt(points: &[Star]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::InsufficientSamples { needed: 3, found: points.len() });
    }
    let m = points.len() as f64;
    let centroid: Star = std::array::from_fn(|i| points.iter().map(|p| p[i]).sum::<f64>() / m);
    let centered = Matrix3xX::from_fn(points.len(), |i, j| points[j][i] - centroid[i]);
    let svd = (&centered * centered.transpose()).symmetric_eigen();
    let k = svd.eigenvalues.imin();
    let normal = svd.eigenvectors.column(k);
    Ok(normal[2].abs().min(1.0).acos())
}

#[derive(Clone, Debug)]
pub struct FallingStarAudit {
    pub two_s: usize,
    pub sign: Sign,
    pub times: Vec<f64>,
    pub zeta: Vec<C64>,
    /// `max |zeta - closed form|`
    pub closed_form_residual: f64,
    /// `max ||zeta - sqrt s| - sqrt s|`
    pub circle_residual_plus: f64,
    /// `max ||zeta + sqrt s| - sqrt s|`
    pub circle_residual_minus: f64,
    pub stationary_stars: usize,
    pub tilt: f64,
    /// `arctan(2 sqrt s)`
    pub tilt_expected: f64,
    pub tilt_max_accel: f64,
    pub max_accel_exceeds: bool,
}

fn moving_roots(h: &HermitianOp, e0: &PureState, times: &[f64]) -> Result<(Vec<C64>, usize)> {
    let mut zeta = Vec::with_capacity(times.len());
    let mut stationary = usize::MAX;
    for &t in times {
        let c = constellation(&evolve(h, t, e0)?)?;
        let moving: Vec<C64> = c.roots.iter().copied().filter(|z| z.norm() > 1e-12).collect();
        if moving.len() != 1 || c.infinity != 0 {
            return Err(Error::InvalidArgument(format!("expected one moving star at t = {t}, found {}", moving.len() + c.infinity)));
        }
        stationary = stationary.min(c.roots.len() - 1);
        zeta.push(moving[0]);
    }
    Ok((zeta, stationary))
}

/// Checks the circle traced by the single moving star of the optimal evolution
/// of `e_0`, and compares its tilt with the max-acceleration evolution.
pub fn falling_star_audit(two_s: usize, times: &[f64], sign: Sign) -> Result<FallingStarAudit> {
    check_spin(two_s, two_s + 1)?;
    if let Some(&t) = times.iter().find(|t| t.sin().abs() < 1e-9) {
        return Err(Error::InvalidArgument(format!("t = {t} is a multiple of pi")));
    }
    let n = two_s + 1;
    let e0 = PureState::basis(n, 0)?;
    let s = two_s as f64 / 2.0;
    let (zeta, stationary_stars) = moving_roots(&canonical_brachistophase(n, sign)?, &e0, times)?;
    let (zeta_acc, _) = moving_roots(&canonical_max_accel(n, sign)?, &e0, times)?;
    let max = |f: &dyn Fn(usize) -> f64| (0..times.len()).map(f).fold(0.0, f64::max);
    let closed_form_residual = max(&|k| (zeta[k] - falling_star_root(two_s, sign, times[k])).norm());
    let circle_residual_plus = max(&|k| ((zeta[k] - re(s.sqrt())).norm() - s.sqrt()).abs());
    let circle_residual_minus = max(&|k| ((zeta[k] + re(s.sqrt())).norm() - s.sqrt()).abs());
    let stars: Vec<Star> = zeta.iter().map(|&z| star_from_root(z)).collect();
    let stars_acc: Vec<Star> = zeta_acc.iter().map(|&z| star_from_root(z)).collect();
    let tilt = plane_tilt(&stars)?;
    let tilt_max_accel = plane_tilt(&stars_acc)?;
    let tilt_expected = (2.0 * s.sqrt()).atan();
    Ok(FallingStarAudit {
        two_s,
        sign,
        times: times.to_vec(),
        zeta,
        closed_form_residual,
        circle_residual_plus,
        circle_residual_minus,
        stationary_stars,
        tilt,
        tilt_expected,
        tilt_max_accel,
        max_accel_exceeds: tilt_max_accel > tilt,
    })
}

/// `n` nodes strictly inside `(0, pi)`.
pub fn open_half_period_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| std::f64::consts::PI * (k as f64 + 0.5) / n as f64).collect()
}
