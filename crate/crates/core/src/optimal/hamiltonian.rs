//! Optimal-path Hamiltonian `𝓗(q, p, r) = p·F[q, r] + G[q, r]`.
//!
//! `F` is the Stratonovich Bloch drift and
//! `G = −r²/2 − γ_e(1+z)/2 − γ_g(1−z)/2 + √γ_e r (x cosθ − y sinθ)`
//! combines the normalization cost with the Gaussian weight of the record.
//! `∂𝓗/∂r = 0` then gives `r* = √γ_e (p·b(q) + x cosθ − y sinθ)`, and the
//! equations of motion follow from forward-mode differentiation of `𝓗`.

use serde::{Deserialize, Serialize};

use crate::params::{DriveAxis, SystemParams};
use crate::state::BlochVector;

use super::dual::{Dual, Scalar};

/// Bloch vector, conjugate momentum and the optimal record at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: BlochVector,
    pub p: [f64; 3],
    pub r: f64,
}

impl PhasePoint {
    /// Point with `r` set to the optimal record.
    pub fn new(q: BlochVector, p: [f64; 3], params: &SystemParams) -> Self {
        Self { q, p, r: optimal_record(&q, &p, params) }
    }
}

/// Constants entering `F` and `G`.
#[derive(Debug, Clone, Copy)]
struct Coeffs {
    half_gamma: f64,
    two_omega: f64,
    sqrt_ge: f64,
    ge: f64,
    gg: f64,
    cos: f64,
    sin: f64,
    axis: DriveAxis,
}

impl Coeffs {
    fn new(p: &SystemParams, axis: DriveAxis) -> Self {
        let (sin, cos) = p.theta().sin_cos();
        Self {
            half_gamma: p.gamma() / 2.0,
            two_omega: 2.0 * p.omega(),
            sqrt_ge: p.gamma_e().sqrt(),
            ge: p.gamma_e(),
            gg: p.gamma_g(),
            cos,
            sin,
            axis,
        }
    }
}

fn k<T: Scalar>(v: f64) -> T {
    T::from(v)
}

fn backaction<T: Scalar>(q: &[T; 3], c: &Coeffs) -> [T; 3] {
    let [x, y, z] = *q;
    let one = k::<T>(1.0);
    let (co, s) = (k::<T>(c.cos), k::<T>(c.sin));
    [(one + z - x * x) * co + x * y * s, (y * y - z - one) * s - x * y * co, (y * s - x * co) * (one + z)]
}

fn quadrature<T: Scalar>(q: &[T; 3], c: &Coeffs) -> T {
    q[0] * k(c.cos) - q[1] * k(c.sin)
}

fn drift<T: Scalar>(q: &[T; 3], r: T, c: &Coeffs) -> [T; 3] {
    let [x, y, z] = *q;
    let g2 = k::<T>(c.half_gamma);
    let w2 = k::<T>(c.two_omega);
    let b = backaction(q, c);
    let rs = r * k(c.sqrt_ge);
    let mut f = [g2 * x * z + rs * b[0], g2 * y * z + rs * b[1], g2 * (z * z - k(1.0)) + rs * b[2]];
    match c.axis {
        DriveAxis::X => {
            f[1] = f[1] - w2 * z;
            f[2] = f[2] + w2 * y;
        }
        DriveAxis::Y => {
            f[0] = f[0] + w2 * z;
            f[2] = f[2] - w2 * x;
        }
    }
    f
}

fn cost<T: Scalar>(q: &[T; 3], r: T, c: &Coeffs) -> T {
    let z = q[2];
    let one = k::<T>(1.0);
    -(r * r) * k(0.5) - (one + z) * k(c.ge / 2.0) - (one - z) * k(c.gg / 2.0) + r * quadrature(q, c) * k(c.sqrt_ge)
}

fn hamiltonian_generic<T: Scalar>(q: &[T; 3], p: &[T; 3], r: T, c: &Coeffs) -> T {
    let f = drift(q, r, c);
    p[0] * f[0] + p[1] * f[1] + p[2] * f[2] + cost(q, r, c)
}

fn arr(q: &BlochVector) -> [f64; 3] {
    q.to_array()
}

/// `F[q, r]`, the Stratonovich drift.
pub fn drift_field(q: &BlochVector, r: f64, params: &SystemParams, axis: DriveAxis) -> BlochVector {
    BlochVector::from_array(drift(&arr(q), r, &Coeffs::new(params, axis)))
}

/// `G[q, r]`.
pub fn cost_function(q: &BlochVector, r: f64, params: &SystemParams) -> f64 {
    cost(&arr(q), r, &Coeffs::new(params, DriveAxis::X))
}

/// `𝓗(q, p, r)` at the stored record of `pt`.
pub fn hamiltonian(pt: &PhasePoint, params: &SystemParams, axis: DriveAxis) -> f64 {
    hamiltonian_generic(&arr(&pt.q), &pt.p, pt.r, &Coeffs::new(params, axis))
}

/// `∂𝓗/∂r`, which vanishes at the optimal record.
pub fn record_gradient(pt: &PhasePoint, params: &SystemParams, axis: DriveAxis) -> f64 {
    let c = Coeffs::new(params, axis);
    let r = Dual::<1>::variable(pt.r, 0);
    let q = arr(&pt.q).map(Dual::from);
    let p = pt.p.map(Dual::from);
    hamiltonian_generic(&q, &p, r, &c).d[0]
}

/// `r* = √γ_e (p·b(q) + x cosθ − y sinθ)`.
pub fn optimal_record(q: &BlochVector, p: &[f64; 3], params: &SystemParams) -> f64 {
    let c = Coeffs::new(params, DriveAxis::X);
    let q = arr(q);
    let b = backaction(&q, &c);
    c.sqrt_ge * (p[0] * b[0] + p[1] * b[1] + p[2] * b[2] + quadrature(&q, &c))
}

/// `(q̇, ṗ) = (∂𝓗/∂p, −∂𝓗/∂q)` with the record eliminated. Because
/// `∂𝓗/∂r = 0` at `r*`, the partial derivatives at fixed `r*` are the total ones.
pub fn hamilton_rhs(pt: &PhasePoint, params: &SystemParams, axis: DriveAxis) -> ([f64; 3], [f64; 3]) {
    let c = Coeffs::new(params, axis);
    let qa = arr(&pt.q);
    let r = optimal_record(&pt.q, &pt.p, params);
    let q: [Dual<6>; 3] = std::array::from_fn(|i| Dual::variable(qa[i], i));
    let p: [Dual<6>; 3] = std::array::from_fn(|i| Dual::variable(pt.p[i], 3 + i));
    let h = hamiltonian_generic(&q, &p, Dual::from(r), &c);
    let q_dot = [h.d[3], h.d[4], h.d[5]];
    let p_dot = [-h.d[0], -h.d[1], -h.d[2]];
    (q_dot, p_dot)
}
