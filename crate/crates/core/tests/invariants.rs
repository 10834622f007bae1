use nhqubit::basis::{Mat3, C64};
use nhqubit::drive::drive_unitary;
use nhqubit::kraus::{homodyne_matrix, hybrid_completeness_residual, photon_counting_residual};
use nhqubit::liouvillian::{build_liouvillian, evolve_qubit, LiouvillianMatrix};
use nhqubit::ode::TimeGrid;
use nhqubit::trajectory::sde::kraus_no_jump_step;
use nhqubit::trajectory::{
    heun_step, integrate_bloch, measurement_record, simulate_ensemble, simulate_sde_ensemble, trajectory_rng,
    wiener_increments, Forcing, JumpPolicy, SdeOptions, SdeScheme,
};
use nhqubit::{density_from_amplitudes, BlochVector, DensityMatrix3, DriveAxis, SystemParams};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn params(ge: f64, gg: f64, omega: f64, theta: f64, dt: f64) -> SystemParams {
    SystemParams::new(ge, gg, omega, theta, dt).unwrap()
}

fn axis() -> impl Strategy<Value = DriveAxis> {
    prop_oneof![Just(DriveAxis::X), Just(DriveAxis::Y)]
}

fn amplitude() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C64::new(re, im))
}

/// Pure state on the sphere from spherical angles.
fn bloch_on_sphere(polar: f64, azimuth: f64) -> BlochVector {
    BlochVector::new(polar.sin() * azimuth.cos(), polar.sin() * azimuth.sin(), polar.cos())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn povm_is_complete_on_rate_grid(ge in prop::sample::select(vec![0.0, 0.2, 1.0, 5.0]),
                                     gg in prop::sample::select(vec![0.0, 0.2, 1.0, 5.0]),
                                     dt in prop::sample::select(vec![1e-3, 1e-2])) {
        let p = params(ge, gg, 0.0, 0.0, dt);
        prop_assert!(photon_counting_residual(&p) < 1e-14);
        prop_assert!(hybrid_completeness_residual(&p) < 1e-8);
    }

    #[test]
    fn homodyne_update_keeps_states_physical(cg in amplitude(), ce in amplitude(), cf in amplitude(),
                                             r in -40.0..40.0f64, theta in 0.0..6.3f64,
                                             omega in 0.0..4.0f64, ax in axis()) {
        prop_assume!(cg.norm_sqr() + ce.norm_sqr() + cf.norm_sqr() > 1e-3);
        let n = (cg.norm_sqr() + ce.norm_sqr() + cf.norm_sqr()).sqrt();
        let rho = density_from_amplitudes(cg / n, ce / n, cf / n).unwrap();
        let p = params(0.2, 1.0, omega, theta, 0.01);
        let next = rho.apply_update(&homodyne_matrix(&p, r), &drive_unitary(omega, 0.01, ax)).unwrap();
        prop_assert!(next.hermiticity_error() < 1e-10);
        prop_assert!(next.min_eigenvalue() > -1e-10);
        prop_assert!((next.trace() - 1.0).abs() < 1e-10);
        prop_assert!((next.purity() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn drive_is_a_semigroup(omega in 0.0..10.0f64, a in 0.0..0.05f64, b in 0.0..0.05f64, ax in axis()) {
        let lhs = drive_unitary(omega, a, ax) * drive_unitary(omega, b, ax);
        let rhs = drive_unitary(omega, a + b, ax);
        prop_assert!((lhs - rhs).norm() < 1e-12);
        let u = drive_unitary(omega, a, ax);
        prop_assert!((u.adjoint() * u - Mat3::identity()).norm() < 1e-12);
    }

    #[test]
    fn liouvillian_spectrum_is_stable_and_axis_independent(ge in 0.0..3.0f64, gg in 0.0..3.0f64, omega in 0.0..5.0f64) {
        let mut sx: Vec<_> = LiouvillianMatrix::from_rates(ge, gg, omega, DriveAxis::X).unwrap().eigenvalues().to_vec();
        let mut sy: Vec<_> = LiouvillianMatrix::from_rates(ge, gg, omega, DriveAxis::Y).unwrap().eigenvalues().to_vec();
        for l in &sx {
            prop_assert!(l.re <= 1e-12);
        }
        let key = |a: &C64, b: &C64| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im));
        sx.sort_by(key);
        sy.sort_by(key);
        // Near an exceptional point eigenvalues carry square-root sensitivity.
        let scale = 1e-10 + 1e-6 * (ge + gg);
        for (a, b) in sx.iter().zip(&sy) {
            prop_assert!((a - b).norm() < scale.max(1e-10), "{a} vs {b}");
        }
    }

    #[test]
    fn kraus_matches_stratonovich_for_a_fixed_record(polar in 0.05..3.1f64, azimuth in 0.0..6.3f64,
                                                    r in -3.0..3.0f64, ax in axis(), theta in 0.0..6.3f64) {
        let q = bloch_on_sphere(polar, azimuth);
        let errs: Vec<f64> = [4e-3, 2e-3, 1e-3]
            .iter()
            .map(|&dt| {
                let p = params(0.2, 1.0, 1.5, theta, dt);
                let k = kraus_no_jump_step(&q, r, &p, &drive_unitary(1.5, dt, ax)).unwrap();
                k.distance(&nhqubit::trajectory::sde::heun_step_with_record(&q, r, &p, ax))
            })
            .collect();
        // Second order: each halving of dt divides the gap by about four.
        prop_assert!(errs[2] < 1e-7 || (errs[0] / errs[1] > 3.0 && errs[1] / errs[2] > 3.0), "{errs:?}");
    }
}

/// With a sampled record `r ~ ξ/√dt` the one-step gap scales as `dt^{3/2}`.
#[test]
fn one_step_cross_check_on_random_pure_states() {
    let mut rng = trajectory_rng(11, 0);
    let states: Vec<(BlochVector, f64)> = (0..200)
        .map(|_| {
            let polar = rng.random::<f64>() * std::f64::consts::PI;
            let azimuth = rng.random::<f64>() * std::f64::consts::TAU;
            (bloch_on_sphere(polar, azimuth), rng.sample::<f64, _>(StandardNormal))
        })
        .collect();
    let dts = [4e-3, 2e-3, 1e-3, 5e-4];
    let c: Vec<f64> = dts
        .iter()
        .map(|&dt| {
            let p = params(0.2, 1.0, 2.0, 0.0, dt);
            let u = drive_unitary(2.0, dt, DriveAxis::X);
            let worst = states
                .iter()
                .map(|(q, xi)| {
                    let dw = xi * dt.sqrt();
                    let r = measurement_record(q, 0.0, 0.2, dw / dt);
                    kraus_no_jump_step(q, r, &p, &u).unwrap().distance(&heun_step(q, dw, &p, DriveAxis::X))
                })
                .fold(0.0, f64::max);
            worst / dt.powf(1.5)
        })
        .collect();
    for w in c.windows(2) {
        assert!((w[1] / w[0] - 1.0).abs() < 0.3, "{c:?}");
    }
}

/// Kraus and Stratonovich paths driven by one noise stream differ by `C·dt`
/// with `C` stable under halving.
#[test]
fn kraus_and_stratonovich_paths_agree_to_first_order() {
    let (t_end, finest) = (5.0f64, 0.0025);
    let steps = (t_end / finest).round() as usize;
    let opts = SdeOptions { norm_tolerance: None };
    let q0 = BlochVector::new(0.0, 0.0, 1.0);
    let streams: Vec<Vec<f64>> = (0..20).map(|i| wiener_increments(steps, finest, &mut trajectory_rng(5, i))).collect();
    for ax in DriveAxis::BOTH {
        let c: Vec<f64> = [4usize, 2, 1]
            .iter()
            .map(|&m| {
                let p = params(0.2, 1.0, 2.0, 0.0, finest * m as f64);
                let total: f64 = streams
                    .iter()
                    .map(|s| {
                        let dw: Vec<f64> = s.chunks(m).map(|c| c.iter().sum()).collect();
                        let k = integrate_bloch(q0, &p, ax, SdeScheme::Kraus, Forcing::Increments(&dw), &opts).unwrap();
                        let h = integrate_bloch(q0, &p, ax, SdeScheme::Stratonovich, Forcing::Increments(&dw), &opts)
                            .unwrap();
                        k.iter().zip(&h).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max)
                    })
                    .sum();
                total / streams.len() as f64 / p.dt()
            })
            .collect();
        for w in c.windows(2) {
            assert!(w[1] / w[0] > 0.7 && w[1] / w[0] < 1.4, "{ax}: {c:?}");
        }
    }
}

#[test]
fn survivor_fraction_tracks_liouvillian_trace() {
    let p = params(0.2, 1.0, 2.0, 0.0, 0.01);
    let n = 4000;
    for ax in DriveAxis::BOTH {
        let stats = simulate_ensemble(n, &DensityMatrix3::excited_f(), &p, 3.0, ax, 3).unwrap();
        let grid = TimeGrid::new(3.0, 0.01).unwrap();
        let l = build_liouvillian(&p, ax);
        let rho = evolve_qubit(&l, &BlochVector::new(0.0, 0.0, 1.0).to_qubit(), &grid).unwrap();
        for (f, r) in stats.survival_fraction().iter().zip(&rho) {
            let tr = (r[(0, 0)] + r[(1, 1)]).re;
            let se = (tr * (1.0 - tr) / n as f64).sqrt().max(1.0 / n as f64);
            assert!((f - tr).abs() < 3.0 * se, "{ax}: {f} vs {tr}");
        }
    }
}

#[test]
fn no_ground_decay_matches_liouvillian_for_both_quadratures() {
    let n = 10_000;
    let q0 = BlochVector::new(0.0, 0.0, 1.0);
    let mut zmax = Vec::new();
    for theta in [0.0, std::f64::consts::FRAC_PI_2] {
        let p = params(1.0, 0.0, 0.3, theta, 0.002);
        for ax in DriveAxis::BOTH {
            let opts = SdeOptions::default();
            let stats =
                simulate_sde_ensemble(n, q0, &p, 2.0, ax, SdeScheme::Kraus, JumpPolicy::Ignore, &opts, 17).unwrap();
            let grid = TimeGrid::new(2.0, p.dt()).unwrap();
            let l = build_liouvillian(&p, ax);
            let exact = nhqubit::liouvillian::evolve_normalized(&l, &q0.to_qubit(), &grid).unwrap();
            let mut z: f64 = 0.0;
            for (k, m) in exact.iter().enumerate() {
                let q = BlochVector::from_qubit(m).unwrap();
                for (s, v) in stats.bloch[k].iter().zip(q.to_array()) {
                    z = z.max((s.mean - v).abs() / s.se.max(1.0 / n as f64));
                }
            }
            zmax.push(z);
        }
    }
    assert!(zmax.iter().all(|&z| z < 3.0), "{zmax:?}");
}
