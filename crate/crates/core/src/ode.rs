//! Fixed-grid classical Runge–Kutta integration.

use nalgebra::SMatrix;
use serde::{Deserialize, Serialize};

use crate::basis::C64;
use crate::error::{Error, Result};

/// State types the integrator can advance.
pub trait OdeState: Clone {
    /// `self + h·k`
    fn axpy(&self, h: f64, k: &Self) -> Self;
    fn max_abs_diff(&self, other: &Self) -> f64;
}

impl<const R: usize, const C: usize> OdeState for SMatrix<C64, R, C> {
    fn axpy(&self, h: f64, k: &Self) -> Self {
        self + k * C64::new(h, 0.0)
    }
    fn max_abs_diff(&self, other: &Self) -> f64 {
        self.iter().zip(other.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

impl<const R: usize, const C: usize> OdeState for SMatrix<f64, R, C> {
    fn axpy(&self, h: f64, k: &Self) -> Self {
        self + k * h
    }
    fn max_abs_diff(&self, other: &Self) -> f64 {
        self.iter().zip(other.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// An autonomous vector field `ds/dt = rate(s)`.
pub trait Generator {
    type State: OdeState;
    fn rate(&self, s: &Self::State) -> Self::State;
}

/// Uniform time grid `t_k = k·dt`, `k = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub steps: usize,
}

impl TimeGrid {
    /// Grid over `[0, t_end]`; `t_end` must be a whole number of steps.
    pub fn new(t_end: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !(t_end >= 0.0) || !t_end.is_finite() {
            return Err(Error::GridMismatch { span: t_end, dt });
        }
        let ratio = t_end / dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::GridMismatch { span: t_end, dt });
        }
        Ok(Self { dt, steps: steps as usize })
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.steps)
    }
}

pub fn rk4_step<S: OdeState>(f: impl Fn(&S) -> S, y: &S, h: f64) -> S {
    let k1 = f(y);
    let k2 = f(&y.axpy(0.5 * h, &k1));
    let k3 = f(&y.axpy(0.5 * h, &k2));
    let k4 = f(&y.axpy(h, &k3));
    y.axpy(h / 6.0, &k1).axpy(h / 3.0, &k2).axpy(h / 3.0, &k3).axpy(h / 6.0, &k4)
}

/// Default bound on the step-doubling local error estimate.
pub const DEFAULT_LOCAL_TOL: f64 = 1e-8;

/// RK4 over `grid`, one step per grid interval. Each step is checked by
/// step doubling; the two-half-step result is kept. A step whose estimated
/// local error exceeds `tol` is rejected with [`Error::StepRejected`].
pub fn integrate<S: OdeState>(f: impl Fn(&S) -> S, y0: S, grid: &TimeGrid, tol: f64) -> Result<Vec<S>> {
    let h = grid.dt;
    let mut out = Vec::with_capacity(grid.len());
    out.push(y0.clone());
    let mut y = y0;
    for k in 0..grid.steps {
        let full = rk4_step(&f, &y, h);
        let half = rk4_step(&f, &rk4_step(&f, &y, 0.5 * h), 0.5 * h);
        let estimate = full.max_abs_diff(&half);
        if !(estimate <= tol) {
            return Err(Error::StepRejected { t: grid.time(k), estimate, tolerance: tol });
        }
        y = half;
        out.push(y.clone());
    }
    Ok(out)
}

/// Integrates a [`Generator`] over `grid` with the default error bound.
pub fn evolve_ode<G: Generator>(g: &G, s0: G::State, grid: &TimeGrid) -> Result<Vec<G::State>> {
    integrate(|s| g.rate(s), s0, grid, DEFAULT_LOCAL_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix2, Vector2};

    #[test]
    fn grid_requires_whole_steps() {
        assert_eq!(TimeGrid::new(5.0, 0.01).unwrap().steps, 500);
        assert_eq!(TimeGrid::new(3.0, 0.01).unwrap().len(), 301);
        assert!(TimeGrid::new(1.005, 0.01).is_err());
        assert!(TimeGrid::new(1.0, 0.0).is_err());
    }

    #[test]
    fn zero_generator_is_constant() {
        let grid = TimeGrid::new(1.0, 0.1).unwrap();
        let y0 = Matrix2::new(C64::new(0.5, 0.0), C64::new(0.1, 0.2), C64::new(0.1, -0.2), C64::new(0.5, 0.0));
        let ys = integrate(|_: &Matrix2<C64>| Matrix2::zeros(), y0, &grid, 1e-8).unwrap();
        assert!(ys.iter().all(|y| *y == y0));
    }

    #[test]
    fn harmonic_oscillator_matches_closed_form() {
        let grid = TimeGrid::new(2.0, 0.01).unwrap();
        let ys = integrate(|y: &Vector2<f64>| Vector2::new(y[1], -y[0]), Vector2::new(1.0, 0.0), &grid, 1e-8).unwrap();
        let last = ys.last().unwrap();
        assert!((last[0] - 2.0f64.cos()).abs() < 1e-10);
    }

    #[test]
    fn coarse_steps_are_rejected() {
        let grid = TimeGrid::new(1.0, 0.5).unwrap();
        let r =
            integrate(|y: &Vector2<f64>| Vector2::new(30.0 * y[1], -30.0 * y[0]), Vector2::new(1.0, 0.0), &grid, 1e-8);
        assert!(matches!(r, Err(Error::StepRejected { .. })));
    }
}
