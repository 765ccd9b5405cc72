//! Cross-module invariant suite with measured residuals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::brachistophase::{
    accel_objective, brachistophase_hamiltonian, max_accel_hamiltonian, random_hamiltonian, Sign,
};
use crate::curves::{accel_norm_sq_projected, accel_norm_sq_superop, covariant_jet, Curve};
use crate::error::{Error, Result};
use crate::geometry::{
    chart_covariant_derivative, christoffel, complex_structure_tangent, embedding_jet, embedding_jet_fd, fs_metric,
    riemann, riemann_from_christoffel_fd, tangent_from_ket, tangent_project_matrix, ChartPoint, Christoffel,
};
use crate::linalg::{evolution_operator, max_abs, re, unitarity_residual, CVector, PureState, C64};
use crate::majorana::{constellation, constellation_distance, reconstruction_residual, state_from_constellation};
use crate::phase::{geometric_phase, phase_derivs_covariant, phase_derivs_vtilde, schrodinger_d3, vtilde_series};

/// Wirtinger step for the finite-difference checks.
const FD_STEP: f64 = 1e-3;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: &str, residual: f64, tol: f64) -> Self {
        Self { name: name.to_string(), residual, tol, passed: residual <= tol }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyConfig {
    /// Hilbert-space dimension `N`.
    pub dim: usize,
    pub seed: u64,
    pub instances: usize,
    /// Size of a point-dependent offset added to the Christoffel symbols fed to
    /// the curvature check; zero in normal runs.
    pub christoffel_perturbation: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { dim: 3, seed: 0, instances: 5, christoffel_perturbation: 0.0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub config: VerifyConfig,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Haar-random pure state.
pub fn random_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<PureState> {
    let amps = CVector::from_fn(n, |_, _| {
        let a: f64 = StandardNormal.sample(rng);
        let b: f64 = StandardNormal.sample(rng);
        C64::new(a, b)
    });
    PureState::normalized(amps)
}

/// Random state orthogonal to `psi`.
pub fn random_orthogonal<R: Rng + ?Sized>(psi: &PureState, rng: &mut R) -> Result<PureState> {
    let x = random_state(psi.dim(), rng)?;
    let p = psi.amplitudes();
    PureState::normalized(x.amplitudes() - p * p.dotc(x.amplitudes()))
}

/// Chart point with components of size about one half.
pub fn random_chart_point<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<ChartPoint> {
    let z: Vec<C64> = (0..n)
        .map(|_| {
            let a: f64 = StandardNormal.sample(rng);
            let b: f64 = StandardNormal.sample(rng);
            C64::new(0.5 * a, 0.5 * b)
        })
        .collect();
    ChartPoint::from_slice(&z)
}

fn perturbed_christoffel(eps: f64) -> impl Fn(&ChartPoint) -> Christoffel {
    move |p| {
        let mut g = christoffel(p);
        if eps != 0.0 {
            let offset = re(eps * p.delta());
            for m in g.gamma.iter_mut() {
                m.iter_mut().for_each(|x| *x += offset);
            }
        }
        g
    }
}

/// Largest entry difference between two derivative tables, relative to the
/// largest entry. Even orders vanish on Schrödinger curves, so entrywise
/// relative errors are meaningless there. NaN entries give NaN.
pub fn table_difference(a: &[f64], b: &[f64]) -> f64 {
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return f64::NAN;
    }
    let scale = a.iter().chain(b).fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

pub fn run_suite(config: &VerifyConfig) -> Result<VerifyReport> {
    let n = config.dim;
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    if config.instances == 0 {
        return Err(Error::InvalidArgument("need at least one instance".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut worst = std::collections::BTreeMap::<&'static str, f64>::new();
    let mut record = |name: &'static str, r: f64| {
        let e = worst.entry(name).or_insert(0.0);
        *e = if r.is_nan() || e.is_nan() { f64::NAN } else { e.max(r) };
    };
    for _ in 0..config.instances {
        let p = random_chart_point(n - 1, &mut rng)?;
        let metric = fs_metric(&p);
        record("metric_inverse", metric.inverse_residual());
        let fd = riemann_from_christoffel_fd(&p, FD_STEP, perturbed_christoffel(config.christoffel_perturbation));
        record("curvature_vs_christoffel_fd", riemann(&p).max_difference(&fd));
        let jet = embedding_jet(&p);
        record("embedding_jet_fd", jet.max_difference(&embedding_jet_fd(&p, FD_STEP)));
        let mut cov: f64 = 0.0;
        for a in 0..n - 1 {
            for b in 0..n - 1 {
                let projected = tangent_project_matrix(&jet.rho, &jet.dd[a][b]);
                cov = cov.max(max_abs(&(projected - chart_covariant_derivative(&metric, &jet, a, b))));
            }
        }
        record("covariant_derivative_projection", cov);

        let psi = random_state(n, &mut rng)?;
        let rho = psi.projector();
        record("projector_idempotent", max_abs(&(rho.matrix() * rho.matrix() - rho.matrix())));
        let u = random_orthogonal(&psi, &mut rng)?;
        let x = tangent_from_ket(&psi, u.amplitudes());
        let jj = complex_structure_tangent(&rho, &complex_structure_tangent(&rho, &x));
        record("complex_structure_squares_to_minus_one", max_abs(&(jj.matrix() + x.matrix())));

        let h = random_hamiltonian(n, &mut rng)?;
        let f = accel_objective(&h, &rho);
        record(
            "acceleration_identities",
            (f - accel_norm_sq_superop(&h, &rho)).abs().max((f - accel_norm_sq_projected(&h, &rho)).abs()),
        );
        record("evolution_unitarity", unitarity_residual(&evolution_operator(&h, rng.random_range(-3.0..3.0))?));

        let curve = Curve::schrodinger(h.clone(), psi.clone())?;
        let cov = phase_derivs_covariant(&covariant_jet(&curve, 0.0)?);
        let vt = phase_derivs_vtilde(&vtilde_series(&curve, 4)?);
        let a: Vec<f64> = (3..=5).map(|k| cov.get(k).unwrap_or(f64::NAN)).collect();
        let b: Vec<f64> = (3..=5).map(|k| vt.get(k).unwrap_or(f64::NAN)).collect();
        record(
            "phase_derivative_routes",
            table_difference(&a, &b).max(table_difference(&a[..1], &[schrodinger_d3(&h, &rho)])),
        );

        let length = rng.random_range(0.1..1.4);
        let geo = Curve::geodesic(psi.clone(), random_orthogonal(&psi, &mut rng)?, 1.0)?;
        record("geodesic_null_phase", geometric_phase(&geo, length, 256)?.final_phase().abs());

        let acc = max_accel_hamiltonian(&rho, Sign::Plus)?;
        record("max_accel_objective", (acc.objective - 1.0).abs());
        let bra = brachistophase_hamiltonian(&rho, Sign::Plus)?;
        record("brachistophase_objective", (bra.objective - 4.0 * 3f64.sqrt() / 9.0).abs());

        let c = constellation(&psi)?;
        let back = constellation(&state_from_constellation(&c.stars)?)?;
        record(
            "majorana_duality",
            reconstruction_residual(&psi, &c)?.max(constellation_distance(&c.stars, &back.stars)),
        );
    }
    let tolerances = [
        ("metric_inverse", 1e-10),
        ("curvature_vs_christoffel_fd", 1e-6),
        ("embedding_jet_fd", 1e-6),
        ("covariant_derivative_projection", 1e-8),
        ("projector_idempotent", 1e-12),
        ("complex_structure_squares_to_minus_one", 1e-12),
        ("acceleration_identities", 1e-10),
        ("evolution_unitarity", 1e-12),
        ("phase_derivative_routes", 1e-9),
        ("geodesic_null_phase", 1e-8),
        ("max_accel_objective", 1e-12),
        ("brachistophase_objective", 1e-12),
        ("majorana_duality", 1e-7),
    ];
    let checks = tolerances
        .iter()
        .map(|&(name, tol)| Check::new(name, worst.get(name).copied().unwrap_or(f64::NAN), tol))
        .collect();
    Ok(VerifyReport { config: config.clone(), checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        let report = run_suite(&VerifyConfig::default()).unwrap();
        for c in &report.checks {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn perturbed_christoffel_is_caught() {
        let report = run_suite(&VerifyConfig { christoffel_perturbation: 1e-3, ..Default::default() }).unwrap();
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        assert_eq!(failed, ["curvature_vs_christoffel_fd"]);
    }
}
