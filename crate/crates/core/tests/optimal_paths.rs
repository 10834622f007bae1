use std::f64::consts::PI;

use nhqubit::optimal::{
    action_functional, hamilton_rhs, hamiltonian, integrate_path, record_gradient, reduce_1d, PhasePoint, PATH_DT,
};
use nhqubit::{BlochVector, DriveAxis, SystemParams};
use proptest::prelude::*;

fn driven() -> SystemParams {
    SystemParams::new(0.2, 1.0, 2.0, 0.0, 0.01).unwrap()
}

fn axis() -> impl Strategy<Value = DriveAxis> {
    prop_oneof![Just(DriveAxis::X), Just(DriveAxis::Y)]
}

fn vec3(lo: f64, hi: f64) -> impl Strategy<Value = [f64; 3]> {
    [lo..hi, lo..hi, lo..hi]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn equations_of_motion_are_gradients_of_the_hamiltonian(q in vec3(-1.0, 1.0), p in vec3(-3.0, 3.0),
                                                           theta in 0.0..6.3f64, ax in axis()) {
        let prm = SystemParams::new(0.2, 1.0, 2.0, theta, 0.01).unwrap();
        let pt = PhasePoint::new(BlochVector::from_array(q), p, &prm);
        prop_assert!(record_gradient(&pt, &prm, ax).abs() < 1e-10);
        let (qdot, pdot) = hamilton_rhs(&pt, &prm, ax);
        let h = 1e-6;
        // The record follows the state, as along a path.
        let energy = |dq: [f64; 3], dp: [f64; 3]| {
            let qs = BlochVector::new(q[0] + dq[0], q[1] + dq[1], q[2] + dq[2]);
            let ps = [p[0] + dp[0], p[1] + dp[1], p[2] + dp[2]];
            hamiltonian(&PhasePoint::new(qs, ps, &prm), &prm, ax)
        };
        for i in 0..3 {
            let mut e = [0.0; 3];
            e[i] = h;
            let m = e.map(|v| -v);
            let dh_dp = (energy([0.0; 3], e) - energy([0.0; 3], m)) / (2.0 * h);
            let dh_dq = (energy(e, [0.0; 3]) - energy(m, [0.0; 3])) / (2.0 * h);
            prop_assert!((qdot[i] - dh_dp).abs() < 1e-8 * dh_dp.abs().max(1.0), "q̇{i}: {} vs {dh_dp}", qdot[i]);
            prop_assert!((pdot[i] + dh_dq).abs() < 1e-8 * dh_dq.abs().max(1.0), "ṗ{i}: {} vs {}", pdot[i], -dh_dq);
        }
    }

    #[test]
    fn energy_is_conserved_along_paths(polar in 0.0..PI, azimuth in 0.0..6.3f64, p in vec3(-1.5, 1.5), ax in axis()) {
        let q0 = BlochVector::new(polar.sin() * azimuth.cos(), polar.sin() * azimuth.sin(), polar.cos());
        let prm = driven();
        let sol = integrate_path(&q0, &p, 1.0, PATH_DT, &prm, ax);
        prop_assume!(sol.is_ok());
        let sol = sol.unwrap();
        prop_assert!(sol.energy_drift <= 1e-6 * sol.energy.abs().max(1.0), "{}", sol.energy_drift);
        for pt in sol.points.iter().step_by(50) {
            prop_assert!(record_gradient(pt, &prm, ax).abs() < 1e-10);
        }
    }

    #[test]
    fn restriction_to_the_y_plane_is_quadratic(theta_b in 0.0..6.3f64, p in -8.0..8.0f64,
                                              ge in 0.05..2.0f64, gg in 0.0..2.0f64, omega in 0.0..4.0f64) {
        let prm = SystemParams::new(ge, gg, omega, 0.0, 0.01).unwrap();
        let q = BlochVector::new(theta_b.sin(), 0.0, theta_b.cos());
        let mom = [p * theta_b.cos(), 0.0, -p * theta_b.sin()];
        let full = hamiltonian(&PhasePoint::new(q, mom, &prm), &prm, DriveAxis::Y);
        let reduced = reduce_1d(theta_b, &prm).energy(p);
        prop_assert!((full - reduced).abs() < 1e-10 * full.abs().max(1.0));
    }

    /// Perturbations vanishing at the endpoints change the action only at
    /// second order.
    #[test]
    fn solutions_are_stationary_points_of_the_action(a in vec3(-1.0, 1.0), b in vec3(-1.0, 1.0), mode in 1..4i32,
                                                    ax in axis()) {
        let prm = driven();
        let t_end = 1.0;
        let sol = integrate_path(&BlochVector::new(0.0, 0.0, 1.0), &[0.3, -0.5, 0.2], t_end, PATH_DT, &prm, ax).unwrap();
        let times = &sol.grid;
        let action = |eps: f64| {
            let (mut q, mut p, mut r) = (Vec::new(), Vec::new(), Vec::new());
            for (t, pt) in times.iter().zip(&sol.points) {
                let bump = (mode as f64 * PI * t / t_end).sin();
                let wave = (PI * t / t_end).cos();
                let qs = pt.q + BlochVector::from_array(a) * (eps * bump);
                let ps = [0, 1, 2].map(|i| pt.p[i] + eps * wave * b[i]);
                let moved = PhasePoint::new(qs, ps, &prm);
                q.push(moved.q);
                p.push(moved.p);
                r.push(moved.r);
            }
            action_functional(times, &q, &p, &r, &prm, ax)
        };
        let eps = 1e-3;
        let size = eps * a.iter().chain(&b).map(|v| v.abs()).fold(0.0, f64::max);
        prop_assume!(size > 1e-5);
        let first_order = 0.5 * (action(eps) - action(-eps));
        // A generic path would give a first-order change comparable to `size`.
        prop_assert!(first_order.abs() <= 1e-4 * size, "{first_order:e} vs {size:e}");
    }
}
