//! One-dimensional phase space on the `y = 0` great circle of the y-driven
//! qubit at `θ = 0`.
//!
//! With `x = sin θ_b`, `z = cos θ_b` and the momentum along the circle, the
//! Hamiltonian is `𝓗 = A p² + B p + C` where
//! `A = (γ_e/2)(1 + cos θ_b)²`,
//! `B = 2ω + (3γ_e/2 − γ_g/2) sin θ_b + (γ_e/2) sin 2θ_b`,
//! `C = (γ_e/2)(1 − cos θ_b) + (γ_e/4)(1 − cos 2θ_b) − γ_e − (γ_g/2)(1 − cos θ_b)`.

use serde::{Deserialize, Serialize};

use crate::params::SystemParams;
use crate::state::BlochVector;

/// Coefficients of the reduced Hamiltonian at one angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Coefficients {
    pub fn energy(&self, p: f64) -> f64 {
        (self.a * p + self.b) * p + self.c
    }
}

/// A point of the reduced phase space with its coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reduced1DState {
    pub theta_b: f64,
    pub p: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Reduced1DState {
    pub fn new(theta_b: f64, p: f64, params: &SystemParams) -> Self {
        let Coefficients { a, b, c } = reduce_1d(theta_b, params);
        Self { theta_b, p, a, b, c }
    }

    pub fn energy(&self) -> f64 {
        (self.a * self.p + self.b) * self.p + self.c
    }

    /// Bloch vector on the circle.
    pub fn bloch(&self) -> BlochVector {
        BlochVector::new(self.theta_b.sin(), 0.0, self.theta_b.cos())
    }

    /// Three-dimensional momentum whose tangential projection is `p`.
    pub fn momentum(&self) -> [f64; 3] {
        [self.p * self.theta_b.cos(), 0.0, -self.p * self.theta_b.sin()]
    }
}

pub fn reduce_1d(theta_b: f64, params: &SystemParams) -> Coefficients {
    derivatives(theta_b, params)[0]
}

/// `(A, B, C)` and their first two derivatives in `θ_b`.
fn derivatives(t: f64, params: &SystemParams) -> [Coefficients; 3] {
    let (ge, gg, w) = (params.gamma_e(), params.gamma_g(), params.omega());
    let (s, c) = t.sin_cos();
    let (s2, c2) = (2.0 * t).sin_cos();
    let k = 1.5 * ge - 0.5 * gg;
    [
        Coefficients {
            a: 0.5 * ge * (1.0 + c).powi(2),
            b: 2.0 * w + k * s + 0.5 * ge * s2,
            c: 0.5 * ge * (1.0 - c) + 0.25 * ge * (1.0 - c2) - ge - 0.5 * gg * (1.0 - c),
        },
        Coefficients { a: -ge * (1.0 + c) * s, b: k * c + ge * c2, c: 0.5 * (ge - gg) * s + 0.5 * ge * s2 },
        Coefficients { a: ge * (s * s - c - c * c), b: -k * s - 2.0 * ge * s2, c: 0.5 * (ge - gg) * c + ge * c2 },
    ]
}

/// Optimal record on the circle, `r = p√γ_e(1 + cos θ_b) + √γ_e sin θ_b`.
pub fn record_1d(theta_b: f64, p: f64, params: &SystemParams) -> f64 {
    let sg = params.gamma_e().sqrt();
    p * sg * (1.0 + theta_b.cos()) + sg * theta_b.sin()
}

/// `(θ̇_b, ṗ)` on the circle.
pub fn flow_1d(theta_b: f64, p: f64, params: &SystemParams) -> (f64, f64) {
    let (s, c) = theta_b.sin_cos();
    let (g, sg) = (params.gamma(), params.gamma_e().sqrt());
    let r = record_1d(theta_b, p, params);
    let theta_dot = 2.0 * params.omega() + g / 2.0 * s + r * sg * (1.0 + c);
    let p_dot = -(p * (g / 2.0 * c - r * sg * s) + r * sg * c + g / 2.0 * s);
    (theta_dot, p_dot)
}

/// Jacobian of [`flow_1d`] with respect to `(θ_b, p)`.
fn jacobian(theta_b: f64, p: f64, params: &SystemParams) -> [[f64; 2]; 2] {
    let [v, d1, d2] = derivatives(theta_b, params);
    let a = 2.0 * d1.a * p + d1.b;
    [[a, 2.0 * v.a], [-(d2.a * p * p + d2.b * p + d2.c), -a]]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FixedPointKind {
    Saddle,
    Center,
    Marginal,
}

/// Classification threshold on the Jacobian eigenvalues.
pub const MARGINAL_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub theta_b: f64,
    pub p: f64,
    pub kind: FixedPointKind,
    /// Jacobian eigenvalues come in pairs `±λ`; this is `λ` as `(re, im)`.
    pub eigenvalue: [f64; 2],
    pub energy: f64,
}

fn classify(theta_b: f64, p: f64, params: &SystemParams) -> FixedPoint {
    let j = jacobian(theta_b, p, params);
    // Traceless 2×2: λ² = −det.
    let lam2 = j[0][0] * j[0][0] + j[0][1] * j[1][0];
    let eigenvalue = if lam2 >= 0.0 { [lam2.sqrt(), 0.0] } else { [0.0, (-lam2).sqrt()] };
    let kind = if eigenvalue[0].abs() >= MARGINAL_THRESHOLD {
        FixedPointKind::Saddle
    } else if eigenvalue[1].abs() >= MARGINAL_THRESHOLD {
        FixedPointKind::Center
    } else {
        FixedPointKind::Marginal
    };
    FixedPoint { theta_b, p, kind, eigenvalue, energy: reduce_1d(theta_b, params).energy(p) }
}

fn newton(mut t: f64, mut p: f64, params: &SystemParams) -> Option<(f64, f64)> {
    let resid = |t: f64, p: f64| {
        let (a, b) = flow_1d(t, p, params);
        a.hypot(b)
    };
    let mut r = resid(t, p);
    for _ in 0..80 {
        if r < 1e-12 {
            return Some((t, p));
        }
        let (f0, f1) = flow_1d(t, p, params);
        let j = jacobian(t, p, params);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-300 {
            return None;
        }
        let dt = (j[1][1] * f0 - j[0][1] * f1) / det;
        let dp = (j[0][0] * f1 - j[1][0] * f0) / det;
        let mut step = 1.0;
        loop {
            let (tn, pn) = (t - step * dt, p - step * dp);
            let rn = resid(tn, pn);
            if rn < r || step < 1e-6 {
                t = tn;
                p = pn;
                r = rn;
                break;
            }
            step *= 0.5;
        }
        if !(t.is_finite() && p.is_finite()) {
            return None;
        }
    }
    (r < 1e-10).then_some((t, p))
}

/// Fixed points of the reduced flow with `θ_b` in `theta_range`, sorted by
/// `(θ_b, p)`.
pub fn find_fixed_points(params: &SystemParams, theta_range: (f64, f64)) -> Vec<FixedPoint> {
    const N_THETA: usize = 64;
    const N_P: usize = 41;
    let (lo, hi) = theta_range;
    let p_half = 10.0_f64.max(2.0 * params.omega() / params.gamma_e().max(0.05));
    let mut found: Vec<FixedPoint> = Vec::new();
    for i in 0..=N_THETA {
        let t0 = lo + (hi - lo) * i as f64 / N_THETA as f64;
        for j in 0..N_P {
            let p0 = -p_half + 2.0 * p_half * j as f64 / (N_P - 1) as f64;
            let Some((t, p)) = newton(t0, p0, params) else { continue };
            if t < lo - 1e-9 || t > hi + 1e-9 {
                continue;
            }
            if found.iter().all(|f| (f.theta_b - t).hypot(f.p - p) > 1e-6) {
                found.push(classify(t, p, params));
            }
        }
    }
    found.sort_by(|a, b| a.theta_b.total_cmp(&b.theta_b).then(a.p.total_cmp(&b.p)));
    found
}

/// One angle of an energy contour; branches are absent where no real
/// momentum exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortraitRow {
    pub theta_b: f64,
    pub p_branch1: Option<f64>,
    pub p_branch2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub energy: f64,
    pub separatrix: bool,
    pub rows: Vec<PortraitRow>,
}

/// Momenta solving `A p² + B p + C = E`, lower root first.
pub fn momenta_at_energy(theta_b: f64, energy: f64, params: &SystemParams) -> (Option<f64>, Option<f64>) {
    let Coefficients { a, b, c } = reduce_1d(theta_b, params);
    let c = c - energy;
    let scale = a.abs() + b.abs() + c.abs();
    if a.abs() <= 1e-14 * scale {
        return if b != 0.0 { (Some(-c / b), None) } else { (None, None) };
    }
    let mut disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        if disc > -1e-12 * (b * b).max(1.0) {
            disc = 0.0;
        } else {
            return (None, None);
        }
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let (r1, r2) = if q != 0.0 { (q / a, c / q) } else { (0.0, 0.0) };
    (Some(r1.min(r2)), Some(r1.max(r2)))
}

/// Energy contours over `theta_grid`. Contours at the energy of a saddle in
/// the grid range are marked as separatrices.
pub fn phase_portrait(energies: &[f64], params: &SystemParams, theta_grid: &[f64]) -> Vec<Contour> {
    let saddle_energies: Vec<f64> = match (theta_grid.first(), theta_grid.last()) {
        (Some(&lo), Some(&hi)) => find_fixed_points(params, (lo.min(hi), lo.max(hi)))
            .into_iter()
            .filter(|f| f.kind == FixedPointKind::Saddle)
            .map(|f| f.energy)
            .collect(),
        _ => Vec::new(),
    };
    energies
        .iter()
        .map(|&energy| Contour {
            energy,
            separatrix: saddle_energies.iter().any(|&e| (e - energy).abs() <= 1e-9 * energy.abs().max(1.0)),
            rows: theta_grid
                .iter()
                .map(|&theta_b| {
                    let (p_branch1, p_branch2) = momenta_at_energy(theta_b, energy, params);
                    PortraitRow { theta_b, p_branch1, p_branch2 }
                })
                .collect(),
        })
        .collect()
}
