//! Bloch-vector stochastic equations for the post-selected qubit.
//!
//! With `γ = γ_e − γ_g` and homodyne record `r`, the Stratonovich form is
//! `q̇ = a(q) + r √γ_e b(q)` where, for quadrature `θ`,
//!
//! ```text
//! a = (γ/2 xz, γ/2 yz, γ/2 (z² − 1)) + drive
//! b = ((1+z−x²) cosθ + xy sinθ, (y²−z−1) sinθ − xy cosθ, (y sinθ − x cosθ)(1+z))
//! ```
//!
//! and the drive adds `(0, −2ωz, 2ωy)` (x-axis) or `(2ωz, 0, −2ωx)` (y-axis).
//! The record is `r dt = √γ_e (x cosθ − y sinθ) dt + dW`. The Itô form
//! follows by adding the usual `½ γ_e (∇b) b` correction.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::basis::{c, Mat3, E, F};
use crate::drive::drive_unitary;
use crate::error::{invalid, Error, Result};
use crate::kraus::homodyne_matrix;
use crate::ode::TimeGrid;
use crate::params::{DriveAxis, SystemParams};
use crate::state::{BlochVector, DensityMatrix3};

use super::record::TrajectoryRecord;

/// Guard on `|q|` used unless a caller opts out.
pub const DEFAULT_NORM_TOLERANCE: f64 = 1e-3;

/// Integrator for the no-jump Bloch dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SdeScheme {
    /// Stratonovich form, Heun predictor-corrector.
    Stratonovich,
    /// Itô form, Euler–Maruyama.
    Ito,
    /// `K_H(r)` update of the embedded qubit state.
    Kraus,
}

impl SdeScheme {
    pub const ALL: [SdeScheme; 3] = [SdeScheme::Stratonovich, SdeScheme::Ito, SdeScheme::Kraus];
}

/// How `|e⟩ → |g⟩` jumps are treated on the Bloch pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JumpPolicy {
    /// Never jump: every trajectory is a no-jump trajectory.
    Ignore,
    /// Jump with probability `γ_g (1 − z)/2 dt` per step and stop the trajectory.
    Sample,
}

/// `x cosθ − y sinθ`.
pub fn quadrature(q: &BlochVector, theta: f64) -> f64 {
    q.x * theta.cos() - q.y * theta.sin()
}

/// `r = √γ_e (x cosθ − y sinθ) + ζ`.
pub fn measurement_record(q: &BlochVector, theta: f64, gamma_e: f64, zeta: f64) -> f64 {
    gamma_e.sqrt() * quadrature(q, theta) + zeta
}

fn coherent_drift(q: &BlochVector, p: &SystemParams, axis: DriveAxis) -> BlochVector {
    let g2 = p.gamma() / 2.0;
    let w2 = 2.0 * p.omega();
    let (x, y, z) = (q.x, q.y, q.z);
    let base = BlochVector::new(g2 * x * z, g2 * y * z, g2 * (z * z - 1.0));
    let drive = match axis {
        DriveAxis::X => BlochVector::new(0.0, -w2 * z, w2 * y),
        DriveAxis::Y => BlochVector::new(w2 * z, 0.0, -w2 * x),
    };
    base + drive
}

fn backaction(q: &BlochVector, theta: f64) -> BlochVector {
    let (s, co) = theta.sin_cos();
    let (x, y, z) = (q.x, q.y, q.z);
    BlochVector::new(
        (1.0 + z - x * x) * co + x * y * s,
        (y * y - z - 1.0) * s - x * y * co,
        (y * s - x * co) * (1.0 + z),
    )
}

/// `(∇b) b`, the directional derivative of the backaction along itself.
fn backaction_gradient(q: &BlochVector, theta: f64) -> BlochVector {
    let (s, co) = theta.sin_cos();
    let (x, y, z) = (q.x, q.y, q.z);
    let b = backaction(q, theta);
    let jac = [
        [-2.0 * x * co + y * s, x * s, co],
        [-y * co, 2.0 * y * s - x * co, -s],
        [-co * (1.0 + z), s * (1.0 + z), y * s - x * co],
    ];
    let v = b.to_array();
    let row = |r: [f64; 3]| r[0] * v[0] + r[1] * v[1] + r[2] * v[2];
    BlochVector::new(row(jac[0]), row(jac[1]), row(jac[2]))
}

/// Stratonovich time derivative `q̇` for a given record value `r`.
pub fn bloch_step_stratonovich(q: &BlochVector, r: f64, p: &SystemParams, axis: DriveAxis) -> BlochVector {
    coherent_drift(q, p, axis) + backaction(q, p.theta()) * (r * p.gamma_e().sqrt())
}

/// Itô drift and diffusion: `dq = A dt + B dW`.
pub fn ito_coefficients(q: &BlochVector, p: &SystemParams, axis: DriveAxis) -> (BlochVector, BlochVector) {
    let ge = p.gamma_e();
    let b = backaction(q, p.theta());
    let drift = coherent_drift(q, p, axis)
        + b * (ge * quadrature(q, p.theta()))
        + backaction_gradient(q, p.theta()) * (0.5 * ge);
    (drift, b * ge.sqrt())
}

/// Euler–Maruyama increment `A dt + B dW`.
pub fn bloch_step_ito(q: &BlochVector, dw: f64, p: &SystemParams, axis: DriveAxis) -> BlochVector {
    let (a, b) = ito_coefficients(q, p, axis);
    a * p.dt() + b * dw
}

/// Heun step for the Stratonovich SDE; the record is re-evaluated at the
/// predicted state with the same Wiener increment.
pub fn heun_step(q: &BlochVector, dw: f64, p: &SystemParams, axis: DriveAxis) -> BlochVector {
    let dt = p.dt();
    let record = |s: &BlochVector| measurement_record(s, p.theta(), p.gamma_e(), dw / dt);
    let f0 = bloch_step_stratonovich(q, record(q), p, axis);
    let pred = *q + f0 * dt;
    let f1 = bloch_step_stratonovich(&pred, record(&pred), p, axis);
    *q + (f0 + f1) * (0.5 * dt)
}

/// Heun step with the record held fixed over the interval.
pub fn heun_step_with_record(q: &BlochVector, r: f64, p: &SystemParams, axis: DriveAxis) -> BlochVector {
    let dt = p.dt();
    let f0 = bloch_step_stratonovich(q, r, p, axis);
    let f1 = bloch_step_stratonovich(&(*q + f0 * dt), r, p, axis);
    *q + (f0 + f1) * (0.5 * dt)
}

/// `q → bloch(U K_H(r) ρ(q) K_H(r)† U†)` for the pure qubit state `ρ(q)`.
pub fn kraus_no_jump_step(q: &BlochVector, r: f64, p: &SystemParams, unitary: &Mat3) -> Result<BlochVector> {
    let rho = embed(q);
    rho.apply_update(&homodyne_matrix(p, r), unitary)?.bloch()
}

/// The qubit state with Bloch vector `q` embedded in the three-level space.
/// Only the `|f⟩–|e⟩` block is filled, so `|q| ≠ 1` is tolerated.
fn embed(q: &BlochVector) -> DensityMatrix3 {
    let mut m = Mat3::zeros();
    m[(F, F)] = c((1.0 + q.z) / 2.0);
    m[(E, E)] = c((1.0 - q.z) / 2.0);
    m[(F, E)] = crate::basis::C64::new(q.x, -q.y) * 0.5;
    m[(E, F)] = m[(F, E)].conj();
    DensityMatrix3::from_matrix_unchecked(m)
}

/// Noise that drives a Bloch path.
#[derive(Debug, Clone, Copy)]
pub enum Forcing<'a> {
    /// Wiener increments `dW_k ~ N(0, dt)`; the record follows from the state.
    Increments(&'a [f64]),
    /// Record values `r_k`, shared verbatim by every scheme.
    Records(&'a [f64]),
}

impl Forcing<'_> {
    fn len(&self) -> usize {
        match self {
            Forcing::Increments(v) | Forcing::Records(v) => v.len(),
        }
    }
}

/// Options for Bloch-path integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeOptions {
    /// Abort once `|q| > 1 + tol`; `None` disables the guard.
    pub norm_tolerance: Option<f64>,
}

impl Default for SdeOptions {
    fn default() -> Self {
        Self { norm_tolerance: Some(DEFAULT_NORM_TOLERANCE) }
    }
}

/// Advances `q` by one step of `scheme` and returns the new state with the
/// record value the step consumed.
#[derive(Debug, Clone)]
pub struct SdeStepper {
    p: SystemParams,
    axis: DriveAxis,
    scheme: SdeScheme,
    unitary: Mat3,
}

impl SdeStepper {
    pub fn new(p: &SystemParams, axis: DriveAxis, scheme: SdeScheme) -> Self {
        Self { p: *p, axis, scheme, unitary: drive_unitary(p.omega(), p.dt(), axis) }
    }

    pub fn step_increment(&self, q: &BlochVector, dw: f64) -> Result<(BlochVector, f64)> {
        let (p, dt) = (&self.p, self.p.dt());
        let r = measurement_record(q, p.theta(), p.gamma_e(), dw / dt);
        let next = match self.scheme {
            SdeScheme::Stratonovich => heun_step(q, dw, p, self.axis),
            SdeScheme::Ito => *q + bloch_step_ito(q, dw, p, self.axis),
            SdeScheme::Kraus => kraus_no_jump_step(q, r, p, &self.unitary)?,
        };
        Ok((next, r))
    }

    pub fn step_record(&self, q: &BlochVector, r: f64) -> Result<BlochVector> {
        let p = &self.p;
        Ok(match self.scheme {
            SdeScheme::Stratonovich => heun_step_with_record(q, r, p, self.axis),
            SdeScheme::Ito => {
                let dw = (r - measurement_record(q, p.theta(), p.gamma_e(), 0.0)) * p.dt();
                *q + bloch_step_ito(q, dw, p, self.axis)
            }
            SdeScheme::Kraus => kraus_no_jump_step(q, r, p, &self.unitary)?,
        })
    }
}

fn check_norm(q: &BlochVector, t: f64, opts: &SdeOptions) -> Result<()> {
    if let Some(tol) = opts.norm_tolerance {
        let norm = q.norm();
        if !(norm <= 1.0 + tol) {
            return Err(Error::BlochNormDrift { t, norm, tolerance: tol });
        }
    }
    Ok(())
}

/// Deterministic Bloch path under prescribed forcing; returns `len + 1` states.
pub fn integrate_bloch(
    q0: BlochVector,
    p: &SystemParams,
    axis: DriveAxis,
    scheme: SdeScheme,
    forcing: Forcing<'_>,
    opts: &SdeOptions,
) -> Result<Vec<BlochVector>> {
    let stepper = SdeStepper::new(p, axis, scheme);
    let mut out = Vec::with_capacity(forcing.len() + 1);
    let mut q = q0;
    out.push(q);
    for k in 0..forcing.len() {
        q = match forcing {
            Forcing::Increments(dw) => stepper.step_increment(&q, dw[k])?.0,
            Forcing::Records(r) => stepper.step_record(&q, r[k])?,
        };
        check_norm(&q, (k + 1) as f64 * p.dt(), opts)?;
        out.push(q);
    }
    Ok(out)
}

/// Draws `steps` Wiener increments of variance `dt`.
pub fn wiener_increments<R: Rng + ?Sized>(steps: usize, dt: f64, rng: &mut R) -> Vec<f64> {
    let s = dt.sqrt();
    (0..steps).map(|_| s * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// One Bloch trajectory over `[0, t_end]`. Each step draws `dW` and, under
/// [`JumpPolicy::Sample`], a uniform for the jump test before moving.
#[allow(clippy::too_many_arguments)]
pub fn simulate_sde<R: Rng + ?Sized>(
    q0: BlochVector,
    p: &SystemParams,
    t_end: f64,
    axis: DriveAxis,
    scheme: SdeScheme,
    policy: JumpPolicy,
    opts: &SdeOptions,
    rng: &mut R,
) -> Result<TrajectoryRecord<BlochVector>> {
    if q0.norm() > 1.0 + 1e-12 {
        return Err(invalid("q0", format!("Bloch vector norm {} exceeds 1", q0.norm())));
    }
    let grid = TimeGrid::new(t_end, p.dt())?;
    let stepper = SdeStepper::new(p, axis, scheme);
    let sqrt_dt = p.dt().sqrt();
    let mut states = Vec::with_capacity(grid.len());
    let mut records = Vec::with_capacity(grid.steps);
    let mut q = q0;
    states.push(q);
    for k in 0..grid.steps {
        if policy == JumpPolicy::Sample {
            let pj = p.p_g() * (1.0 - q.z) / 2.0;
            let u: f64 = rng.random();
            if u < pj {
                records.resize(grid.steps, None);
                return Ok(TrajectoryRecord::new(grid, states, records, Some(k + 1)));
            }
        }
        let dw = sqrt_dt * rng.sample::<f64, _>(StandardNormal);
        let (next, r) = stepper.step_increment(&q, dw)?;
        check_norm(&next, grid.time(k + 1), opts)?;
        q = next;
        states.push(q);
        records.push(Some(r));
    }
    Ok(TrajectoryRecord::new(grid, states, records, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::ONE;
    use crate::liouvillian::LiouvillianMatrix;
    use crate::ode::rk4_step;
    use crate::trajectory::rng::trajectory_rng;
    use nalgebra::Matrix2;
    use std::f64::consts::FRAC_PI_2;

    fn params(ge: f64, gg: f64, w: f64, theta: f64, dt: f64) -> SystemParams {
        SystemParams::new(ge, gg, w, theta, dt).unwrap()
    }

    fn close(a: BlochVector, b: BlochVector, tol: f64) -> bool {
        a.max_abs_diff(&b) < tol
    }

    /// θ = 0 Itô coefficients written out for the two drive axes.
    fn closed_form_ito(q: &BlochVector, p: &SystemParams, axis: DriveAxis) -> (BlochVector, BlochVector) {
        let (ge, gg, w) = (p.gamma_e(), p.gamma_g(), p.omega());
        let (x, y, z) = (q.x, q.y, q.z);
        let drift = match axis {
            DriveAxis::X => BlochVector::new(
                -ge / 2.0 * x - gg / 2.0 * x * z,
                -2.0 * w * z - ge / 2.0 * y - gg / 2.0 * y * z,
                2.0 * w * y - ge * (1.0 + z) + gg / 2.0 * (1.0 - z * z),
            ),
            DriveAxis::Y => BlochVector::new(
                2.0 * w * z - ge / 2.0 * x - gg / 2.0 * x * z,
                -ge / 2.0 * y - gg / 2.0 * y * z,
                -2.0 * w * x - ge * (1.0 + z) + gg / 2.0 * (1.0 - z * z),
            ),
        };
        let s = ge.sqrt();
        (drift, BlochVector::new(s * (1.0 + z - x * x), -s * x * y, -s * x * (1.0 + z)))
    }

    fn sphere_points() -> Vec<BlochVector> {
        let mut v = Vec::new();
        for i in 0..7 {
            for j in 0..5 {
                let th = 0.3 + 0.4 * i as f64;
                let ph = 0.7 + 1.1 * j as f64;
                let rr = 1.0 - 0.05 * j as f64;
                v.push(BlochVector::new(rr * th.sin() * ph.cos(), rr * th.sin() * ph.sin(), rr * th.cos()));
            }
        }
        v
    }

    #[test]
    fn stratonovich_at_excited_f() {
        let p = params(0.2, 1.0, 0.7, 0.0, 0.01);
        let d = bloch_step_stratonovich(&BlochVector::F, 1.3, &p, DriveAxis::X);
        assert!(close(d, BlochVector::new(2.0 * 1.3 * 0.2f64.sqrt(), -1.4, 0.0), 1e-15));
    }

    #[test]
    fn y_drive_keeps_y_zero_from_f() {
        let p = params(0.2, 1.0, 0.7, 0.0, 0.01);
        let mut rng = trajectory_rng(5, 0);
        let dws = wiener_increments(300, p.dt(), &mut rng);
        let path = integrate_bloch(
            BlochVector::F,
            &p,
            DriveAxis::Y,
            SdeScheme::Stratonovich,
            Forcing::Increments(&dws),
            &SdeOptions::default(),
        )
        .unwrap();
        assert!(path.iter().all(|q| q.y == 0.0));
    }

    #[test]
    fn ito_matches_closed_theta_zero_forms() {
        let p = params(0.2, 1.0, 0.9, 0.0, 0.01);
        for axis in DriveAxis::BOTH {
            for q in sphere_points() {
                let (a, b) = ito_coefficients(&q, &p, axis);
                let (pa, pb) = closed_form_ito(&q, &p, axis);
                assert!(close(a, pa, 1e-14) && close(b, pb, 1e-14), "{q:?}");
            }
        }
    }

    #[test]
    fn ito_drift_at_excited_f() {
        let p = params(0.2, 1.0, 0.9, 0.0, 0.01);
        let inc = bloch_step_ito(&BlochVector::F, 0.0, &p, DriveAxis::X);
        assert!(close(inc, BlochVector::new(0.0, -1.8 * 0.01, -0.4 * 0.01), 1e-15));
    }

    #[test]
    fn backaction_gradient_matches_finite_differences() {
        let h = 1e-6;
        for theta in [0.0, 0.7, FRAC_PI_2] {
            for q in sphere_points() {
                let b = backaction(&q, theta);
                let fd = (backaction(&(q + b * h), theta) - backaction(&(q - b * h), theta)) * (0.5 / h);
                assert!(close(fd, backaction_gradient(&q, theta), 1e-8));
            }
        }
    }

    #[test]
    fn quadrature_phase_selects_y() {
        let q = BlochVector::new(0.2, 0.5, -0.1);
        assert!((measurement_record(&q, FRAC_PI_2, 0.2, 0.0) + 0.2f64.sqrt() * 0.5).abs() < 1e-15);
    }

    #[test]
    fn record_statistics() {
        let q = BlochVector::new(0.5, 0.3, 0.1);
        assert!((measurement_record(&q, 0.0, 0.2, 0.0) - 0.5 * 0.2f64.sqrt()).abs() < 1e-15);
        let dt: f64 = 0.01;
        let mut rng = trajectory_rng(6, 0);
        let n = 100_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| measurement_record(&q, 0.0, 0.2, rng.sample::<f64, _>(StandardNormal) / dt.sqrt()))
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var * dt - 1.0).abs() < 0.02);
    }

    #[test]
    fn unmonitored_drift_matches_nonhermitian_propagator() {
        // γ_e = 0, r = 0: q follows the normalized 2×2 non-Hermitian evolution.
        let p = params(0.0, 1.0, 0.4, 0.0, 0.001);
        for axis in DriveAxis::BOTH {
            let l = LiouvillianMatrix::from_rates(0.0, 1.0, 0.4, axis).unwrap();
            let mut rho = Matrix2::new(ONE, crate::basis::ZERO, crate::basis::ZERO, crate::basis::ZERO);
            let mut q = BlochVector::F;
            for _ in 0..2000 {
                q = heun_step_with_record(&q, 0.0, &p, axis);
                rho = rk4_step(|s| l.apply(s), &rho, p.dt());
            }
            let n = (rho[(0, 0)] + rho[(1, 1)]).re;
            let want = BlochVector::new(
                2.0 * rho[(0, 1)].re / n,
                -2.0 * rho[(0, 1)].im / n,
                (rho[(0, 0)] - rho[(1, 1)]).re / n,
            );
            assert!(close(q, want, 1e-5), "{q:?} {want:?}");
        }
    }

    #[test]
    fn kraus_step_with_zero_record_is_tiny_drift() {
        let p = params(0.2, 1.0, 0.0, 0.0, 0.001);
        let u = drive_unitary(0.0, p.dt(), DriveAxis::X);
        let q = BlochVector::new(0.6, 0.0, 0.8);
        let next = kraus_no_jump_step(&q, 0.0, &p, &u).unwrap();
        let euler = q + bloch_step_stratonovich(&q, 0.0, &p, DriveAxis::X) * p.dt();
        assert!(close(next, euler, 1e-5));
    }

    #[test]
    fn kraus_and_heun_agree_for_a_fixed_record_to_second_order() {
        let q = BlochVector::new(0.6, -0.48, 0.64);
        let mut errs = Vec::new();
        for dt in [4e-3, 2e-3, 1e-3] {
            let p = params(0.2, 1.0, 1.5, 0.4, dt);
            let u = drive_unitary(p.omega(), dt, DriveAxis::Y);
            let k = kraus_no_jump_step(&q, 2.0, &p, &u).unwrap();
            let h = heun_step_with_record(&q, 2.0, &p, DriveAxis::Y);
            errs.push(k.distance(&h));
        }
        assert!(errs[0] / errs[1] > 3.5 && errs[1] / errs[2] > 3.5, "{errs:?}");
    }

    #[test]
    fn jump_sampling_terminates() {
        let p = params(0.2, 1.0, 3.0, 0.0, 0.01);
        let mut jumped = 0;
        for i in 0..50 {
            let mut rng = trajectory_rng(8, i);
            let rec = simulate_sde(
                BlochVector::F,
                &p,
                5.0,
                DriveAxis::X,
                SdeScheme::Kraus,
                JumpPolicy::Sample,
                &SdeOptions::default(),
                &mut rng,
            )
            .unwrap();
            assert_eq!(rec.records.len(), rec.grid.steps);
            if let Some(j) = rec.jump_index {
                jumped += 1;
                assert_eq!(rec.states.len(), j);
            } else {
                assert_eq!(rec.states.len(), rec.grid.len());
            }
        }
        assert!(jumped > 25);
    }

    #[test]
    fn norm_guard_fires() {
        let p = params(0.2, 1.0, 0.0, 0.0, 0.01);
        let big = [1e3; 3];
        let err = integrate_bloch(
            BlochVector::F,
            &p,
            DriveAxis::X,
            SdeScheme::Ito,
            Forcing::Increments(&big),
            &SdeOptions::default(),
        );
        assert!(matches!(err, Err(Error::BlochNormDrift { .. })));
        let ok = integrate_bloch(
            BlochVector::F,
            &p,
            DriveAxis::X,
            SdeScheme::Ito,
            Forcing::Increments(&big),
            &SdeOptions { norm_tolerance: None },
        );
        assert!(ok.is_ok());
    }
}
