use brachisto_core::brachistophase::{
    accel_objective, canonical_brachistophase, max_accel_hamiltonian, project_constraints, random_hamiltonian, Sign,
};
use brachisto_core::curves::{ambient_derivatives, covariant_jet, Curve};
use brachisto_core::geometry::{fs_metric, riemann, tangent_from_ket, tangent_project_matrix};
use brachisto_core::linalg::{
    evolution_operator, evolve, expectation_powers, max_abs, metric_g, odd_part, even_part, projector_superop,
    unvectorize, vectorize, CMatrix, HermitianOp, PureState, C64,
};
use brachisto_core::majorana::{
    constellation, constellation_distance, rotate, spin_matrices, state_from_constellation, trajectory,
};
use brachisto_core::phase::{bargmann_phase, geodesic_frame, geometric_phase, schrodinger_d3};
use brachisto_core::verify::{random_chart_point, random_orthogonal, random_state};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_matrix(n: usize, r: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
}

fn random_unitary(n: usize, r: &mut ChaCha8Rng) -> CMatrix {
    random_matrix(n, r).qr().q()
}

fn config() -> ProptestConfig {
    ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn projector_superop_is_odd_part(seed in any::<u64>(), n in 2usize..=5) {
        let mut r = rng(seed);
        let rho = random_state(n, &mut r).unwrap().projector();
        let a = random_hamiltonian(n, &mut r).unwrap();
        let lhs = unvectorize(&projector_superop(&rho).apply_vec(&vectorize(a.matrix())), n);
        prop_assert!(max_abs(&(lhs - odd_part(&rho, a.matrix()))) <= 1e-10);
    }

    #[test]
    fn odd_and_even_parts_are_orthogonal(seed in any::<u64>(), n in 2usize..=5) {
        let mut r = rng(seed);
        let rho = random_state(n, &mut r).unwrap().projector();
        let a = odd_part(&rho, random_hamiltonian(n, &mut r).unwrap().matrix());
        let b = even_part(&rho, random_hamiltonian(n, &mut r).unwrap().matrix());
        prop_assert!((a * b).trace().norm() <= 1e-10);
    }

    #[test]
    fn evolution_preserves_overlaps(seed in any::<u64>(), n in 2usize..=5, t in -5.0f64..5.0) {
        let mut r = rng(seed);
        let h = random_hamiltonian(n, &mut r).unwrap();
        let phi = random_state(n, &mut r).unwrap();
        let psi = random_state(n, &mut r).unwrap();
        let a = evolve(&h, t, &phi).unwrap().inner(&evolve(&h, t, &psi).unwrap()).norm();
        prop_assert!((a - phi.inner(&psi).norm()).abs() <= 1e-12);
    }

    #[test]
    fn metric_pullback(seed in any::<u64>(), n in 2usize..=5) {
        let mut r = rng(seed);
        let psi = random_state(n, &mut r).unwrap();
        let u = random_orthogonal(&psi, &mut r).unwrap().amplitudes() * C64::new(0.7, 0.2);
        let v = random_orthogonal(&psi, &mut r).unwrap().amplitudes() * C64::new(-0.3, 1.1);
        let g = metric_g(&tangent_from_ket(&psi, &u), &tangent_from_ket(&psi, &v));
        prop_assert!((g - u.dotc(&v).re).abs() <= 1e-10);
    }

    #[test]
    fn metric_is_ad_invariant(seed in any::<u64>(), n in 2usize..=5) {
        let mut r = rng(seed);
        let [z, x, y] = [0; 3].map(|_| random_hamiltonian(n, &mut r).unwrap());
        let g = |a: &CMatrix, b: &CMatrix| 0.5 * (a * b).trace().re;
        let zx = z.matrix() * x.matrix() - x.matrix() * z.matrix();
        let zy = z.matrix() * y.matrix() - y.matrix() * z.matrix();
        prop_assert!((g(&zx, y.matrix()) + g(x.matrix(), &zy)).abs() <= 1e-10);
    }

    #[test]
    fn holomorphic_sectional_curvature_is_constant(seed in any::<u64>(), n in 1usize..=4) {
        let mut r = rng(seed);
        let p = random_chart_point(n, &mut r).unwrap();
        let u = random_matrix(n, &mut r).column(0).into_owned();
        let g = fs_metric(&p).g;
        prop_assert!((riemann(&p).holomorphic_sectional(&g, &u) - 4.0).abs() <= 1e-8);
    }

    #[test]
    fn schrodinger_rho_dot_identities(seed in any::<u64>(), n in 2usize..=5, t in 0.0f64..3.0) {
        let mut r = rng(seed);
        let h = random_hamiltonian(n, &mut r).unwrap();
        let psi0 = random_state(n, &mut r).unwrap();
        let curve = Curve::schrodinger(h.clone(), psi0).unwrap();
        let d = ambient_derivatives(&curve, t, 2).unwrap();
        let rho = curve.rho_at(t).unwrap();
        let psi = rho.ket();
        let m = expectation_powers(&h, &rho, 2);
        let mu = m[2] - m[1] * m[1];
        // horizontal ket derivative -i (H - h1) psi
        let hp = h.matrix() * psi.amplitudes() - psi.amplitudes() * C64::new(m[1], 0.0);
        let psi_dot = hp * C64::new(0.0, -1.0);
        let rd = d[0].matrix();
        let rd2 = rd * rd;
        let expected = rho.matrix() * C64::new(mu, 0.0) + &psi_dot * psi_dot.adjoint();
        prop_assert!(max_abs(&(&rd2 - expected)) <= 1e-10);
        prop_assert!(max_abs(&(&rd2 * rd - rd * C64::new(mu, 0.0))) <= 1e-10);
        let tr_rdd = (rho.matrix() * d[1].matrix()).trace().re;
        prop_assert!((tr_rdd + 2.0 * (rho.matrix() * &rd2).trace().re).abs() <= 1e-10);
        prop_assert!((tr_rdd.powi(2) - 4.0 * (m[1] * m[1] - m[2]).powi(2)).abs() <= 1e-10);
    }

    #[test]
    fn schrodinger_speed_is_constant(seed in any::<u64>(), n in 2usize..=5) {
        let mut r = rng(seed);
        let curve = Curve::schrodinger(random_hamiltonian(n, &mut r).unwrap(), random_state(n, &mut r).unwrap()).unwrap();
        let s0 = covariant_jet(&curve, 0.0).unwrap().speed_sq;
        for k in 1..=6 {
            let s = covariant_jet(&curve, 0.5 * k as f64).unwrap().speed_sq;
            prop_assert!((s - s0).abs() <= 1e-10);
        }
    }

    #[test]
    fn phase_is_unitarily_covariant(seed in any::<u64>(), n in 2usize..=4) {
        let mut r = rng(seed);
        let h = random_hamiltonian(n, &mut r).unwrap();
        let psi = random_state(n, &mut r).unwrap();
        let u = random_unitary(n, &mut r);
        let moved = PureState::new(&u * psi.amplitudes()).unwrap();
        let a = geometric_phase(&Curve::schrodinger(h.clone(), psi).unwrap(), 1.0, 256).unwrap().final_phase();
        let b = geometric_phase(&Curve::schrodinger(h.conjugate_by(&u), moved).unwrap(), 1.0, 256).unwrap().final_phase();
        prop_assert!((a - b).abs() <= 1e-9);
    }

    #[test]
    fn bargmann_phase_is_gauge_invariant(seed in any::<u64>(), n in 2usize..=4) {
        let mut r = rng(seed);
        let states: Vec<PureState> = (0..5).map(|_| random_state(n, &mut r).unwrap()).collect();
        let rephased: Vec<PureState> = states.iter().map(|s| s.with_phase(r.random_range(-3.0..3.0))).collect();
        let a = bargmann_phase(&states, false).unwrap();
        let b = bargmann_phase(&rephased, false).unwrap();
        let d = (a - b).rem_euclid(std::f64::consts::TAU);
        prop_assert!(d.min(std::f64::consts::TAU - d) <= 1e-9);
    }

    #[test]
    fn geodesic_frame_projectors(seed in any::<u64>(), n in 2usize..=4, t in 0.1f64..0.8) {
        let mut r = rng(seed);
        let curve = Curve::schrodinger(random_hamiltonian(n, &mut r).unwrap(), random_state(n, &mut r).unwrap()).unwrap();
        let Ok(fr) = geodesic_frame(&curve, t) else { return Ok(()) };
        let rho0 = fr.psi0.projector();
        let p = rho0.matrix() + fr.sigma();
        prop_assert!(max_abs(&(&p * &p - &p)) <= 1e-12);
        let normal = |m: &CMatrix| m - tangent_project_matrix(&rho0, m);
        let x = fr.x_hat(0.6);
        let y = fr.y_hat();
        let xp = tangent_project_matrix(&rho0, x.matrix());
        let yp = tangent_project_matrix(&rho0, y.matrix());
        let full = x.matrix() * y.matrix() - y.matrix() * x.matrix();
        let par = &xp * &yp - &yp * &xp;
        prop_assert!(max_abs(&(normal(&full) - normal(&par))) <= 1e-10);
    }

    #[test]
    fn accel_objective_is_orbit_invariant(seed in any::<u64>(), n in 2usize..=5) {
        let mut r = rng(seed);
        let h = random_hamiltonian(n, &mut r).unwrap();
        let psi = random_state(n, &mut r).unwrap();
        let u = random_unitary(n, &mut r);
        let moved = PureState::new(&u * psi.amplitudes()).unwrap().projector();
        let a = accel_objective(&h, &psi.projector());
        prop_assert!((a - accel_objective(&h.conjugate_by(&u), &moved)).abs() <= 1e-10);
    }

    #[test]
    fn stability_subgroup_keeps_third_derivative(seed in any::<u64>(), n in 2usize..=5, theta in -3.0f64..3.0) {
        let mut r = rng(seed);
        let h = canonical_brachistophase(n, Sign::Plus).unwrap();
        let mut g = CMatrix::zeros(n, n);
        g[(0, 0)] = C64::from_polar(1.0, theta);
        g.view_mut((1, 1), (n - 1, n - 1)).copy_from(&random_unitary(n - 1, &mut r));
        let rho0 = PureState::basis(n, 0).unwrap().projector();
        let d = schrodinger_d3(&h.conjugate_by(&g), &rho0);
        prop_assert!((d - 4.0 * 3f64.sqrt() / 9.0).abs() <= 1e-12);
    }

    #[test]
    fn both_accel_signs_are_optimal(seed in any::<u64>(), n in 2usize..=5) {
        let mut r = rng(seed);
        let rho = random_state(n, &mut r).unwrap().projector();
        let a = max_accel_hamiltonian(&rho, Sign::Plus).unwrap().objective;
        let b = max_accel_hamiltonian(&rho, Sign::Minus).unwrap().objective;
        prop_assert!((a - b).abs() <= 1e-12 && (a - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn constraint_projection_is_idempotent(seed in any::<u64>(), n in 2usize..=5) {
        let mut r = rng(seed);
        let h = HermitianOp::hermitian_part(&random_matrix(n, &mut r));
        let once = project_constraints(&h).unwrap();
        let twice = project_constraints(&once).unwrap();
        prop_assert!(max_abs(&(once.matrix() - twice.matrix())) <= 1e-12);
        prop_assert!((0.5 * (once.matrix() * once.matrix()).trace().re - 1.0).abs() <= 1e-12);
        prop_assert!(once.trace().abs() <= 1e-12);
    }

    #[test]
    fn constellation_rotates_with_state(seed in any::<u64>(), two_s in 1usize..=4, angle in -3.0f64..3.0) {
        let mut r = rng(seed);
        let psi = random_state(two_s + 1, &mut r).unwrap();
        let stars = constellation(&psi).unwrap().stars;
        let [sx, _, sz] = spin_matrices(two_s);
        for (gen, axis) in [(sz, [0.0, 0.0, 1.0]), (sx, [1.0, 0.0, 0.0])] {
            let moved = PureState::normalized(evolution_operator(&gen, angle).unwrap() * psi.amplitudes()).unwrap();
            let expected: Vec<_> = stars.iter().map(|s| rotate(s, &axis, angle)).collect();
            prop_assert!(constellation_distance(&expected, &constellation(&moved).unwrap().stars) <= 1e-8);
        }
    }

    #[test]
    fn constellation_state_duality(seed in any::<u64>(), two_s in 1usize..=5) {
        let mut r = rng(seed);
        let psi = random_state(two_s + 1, &mut r).unwrap();
        let c = constellation(&psi).unwrap();
        let back = state_from_constellation(&c.stars).unwrap();
        prop_assert!((back.inner(&psi).norm() - 1.0).abs() <= 1e-7);
        prop_assert!(constellation_distance(&c.stars, &constellation(&back).unwrap().stars) <= 1e-7);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn trajectories_conserve_star_count(seed in any::<u64>(), two_s in 1usize..=4) {
        let mut r = rng(seed);
        let h = random_hamiltonian(two_s + 1, &mut r).unwrap();
        let psi = random_state(two_s + 1, &mut r).unwrap();
        let grid: Vec<f64> = (0..21).map(|k| 0.1 * k as f64).collect();
        let tr = trajectory(&h, &psi, &grid).unwrap();
        prop_assert_eq!(tr.star_count(), two_s);
        prop_assert!(tr.tracks.iter().all(|t| t.len() == tr.times.len()));
        prop_assert!(tr.merges.is_empty() || tr.max_step() > 0.0);
    }
}
