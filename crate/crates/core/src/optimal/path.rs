//! Integration of the optimal-path equations and two-point shooting.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::ode::TimeGrid;
use crate::params::{DriveAxis, SystemParams};
use crate::state::BlochVector;

use super::hamiltonian::{cost_function, hamilton_rhs, hamiltonian, PhasePoint};

/// Step size for optimal-path integration (µs).
pub const PATH_DT: f64 = 1e-3;

/// Largest endpoint residual accepted by [`shoot`].
pub const SHOOT_TOLERANCE: f64 = 1e-3;

/// Extremal path on a uniform time grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathSolution {
    pub grid: Vec<f64>,
    pub points: Vec<PhasePoint>,
    /// `𝓗` at `t = 0`.
    pub energy: f64,
    /// `max_t |𝓗(t) − 𝓗(0)|`.
    pub energy_drift: f64,
    /// `S(T) = ∫ (−p·q̇ + 𝓗) dt`.
    pub action: f64,
    pub cumulative_action: Vec<f64>,
    pub endpoint_residual: f64,
}

impl PathSolution {
    pub fn initial_momentum(&self) -> [f64; 3] {
        self.points[0].p
    }

    pub fn final_point(&self) -> &PhasePoint {
        self.points.last().expect("paths hold at least one point")
    }

    /// `𝓗` at every stored point.
    pub fn energies(&self, params: &SystemParams, axis: DriveAxis) -> Vec<f64> {
        self.points.iter().map(|pt| hamiltonian(pt, params, axis)).collect()
    }

    /// Bloch vector at time `t` by linear interpolation.
    pub fn q_at(&self, t: f64) -> BlochVector {
        let h = self.grid[1] - self.grid[0];
        let s = (t / h).clamp(0.0, (self.grid.len() - 1) as f64);
        let k = (s.floor() as usize).min(self.grid.len() - 2);
        let w = s - k as f64;
        self.points[k].q * (1.0 - w) + self.points[k + 1].q * w
    }
}

type Phase = [f64; 7];

/// `(q̇, ṗ, Ṡ)`; along the optimal path `−p·q̇ + 𝓗 = G`.
fn phase_rate(y: &Phase, params: &SystemParams, axis: DriveAxis) -> Phase {
    let q = BlochVector::new(y[0], y[1], y[2]);
    let pt = PhasePoint::new(q, [y[3], y[4], y[5]], params);
    let (qd, pd) = hamilton_rhs(&pt, params, axis);
    [qd[0], qd[1], qd[2], pd[0], pd[1], pd[2], cost_function(&q, pt.r, params)]
}

fn rk4(y: &Phase, h: f64, params: &SystemParams, axis: DriveAxis) -> Phase {
    let add = |a: &Phase, b: &Phase, s: f64| -> Phase { std::array::from_fn(|i| a[i] + s * b[i]) };
    let k1 = phase_rate(y, params, axis);
    let k2 = phase_rate(&add(y, &k1, h / 2.0), params, axis);
    let k3 = phase_rate(&add(y, &k2, h / 2.0), params, axis);
    let k4 = phase_rate(&add(y, &k3, h), params, axis);
    std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

fn endpoint(
    q0: &BlochVector,
    p0: &[f64; 3],
    steps: usize,
    h: f64,
    params: &SystemParams,
    axis: DriveAxis,
) -> Option<BlochVector> {
    let mut y: Phase = [q0.x, q0.y, q0.z, p0[0], p0[1], p0[2], 0.0];
    for _ in 0..steps {
        y = rk4(&y, h, params, axis);
        if !y.iter().all(|v| v.is_finite()) || y[..3].iter().any(|v| v.abs() > 10.0) {
            return None;
        }
    }
    Some(BlochVector::new(y[0], y[1], y[2]))
}

/// Integrates the optimal-path equations from `(q0, p0)` with RK4.
/// The endpoint residual is left at zero.
pub fn integrate_path(
    q0: &BlochVector,
    p0: &[f64; 3],
    t_end: f64,
    h: f64,
    params: &SystemParams,
    axis: DriveAxis,
) -> Result<PathSolution> {
    let grid = TimeGrid::new(t_end, h)?;
    let mut y: Phase = [q0.x, q0.y, q0.z, p0[0], p0[1], p0[2], 0.0];
    let mut points = Vec::with_capacity(grid.len());
    let mut cumulative_action = Vec::with_capacity(grid.len());
    let point = |y: &Phase| PhasePoint::new(BlochVector::new(y[0], y[1], y[2]), [y[3], y[4], y[5]], params);
    points.push(point(&y));
    cumulative_action.push(0.0);
    for k in 1..grid.len() {
        y = rk4(&y, grid.dt, params, axis);
        if !y.iter().all(|v| v.is_finite()) {
            return Err(invalid("p0", format!("optimal path diverged at t = {}", grid.time(k))));
        }
        points.push(point(&y));
        cumulative_action.push(y[6]);
    }
    let energy = hamiltonian(&points[0], params, axis);
    let energy_drift = points.iter().map(|pt| (hamiltonian(pt, params, axis) - energy).abs()).fold(0.0, f64::max);
    Ok(PathSolution {
        grid: grid.times(),
        points,
        energy,
        energy_drift,
        action: y[6],
        cumulative_action,
        endpoint_residual: 0.0,
    })
}

/// Multi-start settings for [`shoot_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootOptions {
    pub starts: usize,
    /// Starts fill `[−w, w]³`.
    pub box_half_width: f64,
    pub dt: f64,
    pub tolerance: f64,
    pub max_evaluations: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self { starts: 64, box_half_width: 6.0, dt: PATH_DT, tolerance: SHOOT_TOLERANCE, max_evaluations: 3000 }
    }
}

/// Extremal path from `q_i` to `q_f` in time `t_end` with default options
/// and `starts` initial guesses.
pub fn shoot(
    q_i: &BlochVector,
    q_f: &BlochVector,
    t_end: f64,
    params: &SystemParams,
    axis: DriveAxis,
    starts: usize,
) -> Result<PathSolution> {
    shoot_with(q_i, q_f, t_end, params, axis, &ShootOptions { starts, ..ShootOptions::default() })
}

pub fn shoot_with(
    q_i: &BlochVector,
    q_f: &BlochVector,
    t_end: f64,
    params: &SystemParams,
    axis: DriveAxis,
    opts: &ShootOptions,
) -> Result<PathSolution> {
    if opts.starts == 0 {
        return Err(invalid("starts", "need at least one start"));
    }
    if q_i.norm() > 1.0 + 1e-12 || q_f.norm() > 1.0 + 1e-12 {
        return Err(invalid("q", "boundary states must lie in the unit ball"));
    }
    let grid = TimeGrid::new(t_end, opts.dt)?;
    let steps = grid.steps;
    let objective = |p0: &[f64; 3]| match endpoint(q_i, p0, steps, grid.dt, params, axis) {
        Some(q) => q.distance(q_f),
        None => f64::INFINITY,
    };

    let w = opts.box_half_width;
    let candidates: Vec<([f64; 3], f64)> = (0..opts.starts)
        .into_par_iter()
        .map(|i| {
            let u = halton(i + 1);
            let start = u.map(|v| w * (2.0 * v - 1.0));
            nelder_mead(&objective, start, 0.1 * w, opts.max_evaluations)
        })
        .collect();

    let mut solutions: Vec<PathSolution> = Vec::new();
    let mut best: Option<([f64; 3], f64)> = None;
    for (p0, res) in candidates {
        if best.is_none_or(|(_, r)| res < r) {
            best = Some((p0, res));
        }
        if res <= opts.tolerance {
            if let Ok(mut sol) = integrate_path(q_i, &p0, t_end, grid.dt, params, axis) {
                sol.endpoint_residual = res;
                solutions.push(sol);
            }
        }
    }
    let (best_p0, best_res) = best.expect("at least one start");
    // Converged paths are ranked by |S|; the residual breaks remaining ties.
    solutions
        .into_iter()
        .min_by(|a, b| {
            a.action.abs().total_cmp(&b.action.abs()).then(a.endpoint_residual.total_cmp(&b.endpoint_residual))
        })
        .ok_or(Error::NoConvergence { residual: best_res, best_p0 })
}

fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Point `i` of the Halton sequence in bases 2, 3, 5.
fn halton(i: usize) -> [f64; 3] {
    [radical_inverse(i, 2), radical_inverse(i, 3), radical_inverse(i, 5)]
}

/// Derivative-free simplex minimization. Returns the best vertex and value.
fn nelder_mead(f: &impl Fn(&[f64; 3]) -> f64, x0: [f64; 3], step: f64, max_evals: usize) -> ([f64; 3], f64) {
    const TARGET: f64 = 1e-11;
    let mut simplex: Vec<([f64; 3], f64)> = (0..4)
        .map(|j| {
            let mut x = x0;
            if j > 0 {
                x[j - 1] += step;
            }
            (x, f(&x))
        })
        .collect();
    let mut evals = 4;
    let lerp = |a: &[f64; 3], b: &[f64; 3], t: f64| -> [f64; 3] { std::array::from_fn(|i| a[i] + t * (b[i] - a[i])) };
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let size = simplex[1..]
            .iter()
            .map(|(x, _)| (0..3).map(|i| (x[i] - simplex[0].0[i]).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if simplex[0].1 < TARGET || size < 1e-13 {
            break;
        }
        let centroid: [f64; 3] = std::array::from_fn(|i| (simplex[0].0[i] + simplex[1].0[i] + simplex[2].0[i]) / 3.0);
        let worst = simplex[3];
        let xr = lerp(&centroid, &worst.0, -1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < simplex[0].1 {
            let xe = lerp(&centroid, &worst.0, -2.0);
            let fe = f(&xe);
            evals += 1;
            simplex[3] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[2].1 {
            simplex[3] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let x = lerp(&centroid, &xr, 0.5);
                (x, f(&x))
            } else {
                let x = lerp(&centroid, &worst.0, 0.5);
                (x, f(&x))
            };
            evals += 1;
            if fc < worst.1.min(fr) {
                simplex[3] = (xc, fc);
            } else {
                let best = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    v.0 = lerp(&best, &v.0, 0.5);
                    v.1 = f(&v.0);
                }
                evals += 3;
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0]
}

/// `S = ∫ (−p·q̇ + 𝓗(q, p, r)) dt` for arbitrary sampled curves, with `q̇`
/// from finite differences and the trapezoid rule.
pub fn action_functional(
    times: &[f64],
    q: &[BlochVector],
    p: &[[f64; 3]],
    r: &[f64],
    params: &SystemParams,
    axis: DriveAxis,
) -> f64 {
    let n = times.len();
    let integrand: Vec<f64> = (0..n)
        .map(|k| {
            let (a, b) = if k == 0 {
                (0, 1)
            } else if k == n - 1 {
                (n - 2, n - 1)
            } else {
                (k - 1, k + 1)
            };
            let qd = (q[b] - q[a]) * (1.0 / (times[b] - times[a]));
            let pt = PhasePoint { q: q[k], p: p[k], r: r[k] };
            -(p[k][0] * qd.x + p[k][1] * qd.y + p[k][2] * qd.z) + hamiltonian(&pt, params, axis)
        })
        .collect();
    (1..n).map(|k| 0.5 * (times[k] - times[k - 1]) * (integrand[k] + integrand[k - 1])).sum()
}
