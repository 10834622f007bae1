use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest `γ·dt` accepted; beyond this the Markovian detector picture fails.
pub const MARKOV_LIMIT: f64 = 0.1;

/// Physical and numerical parameters of the monitored three-level system.
///
/// Rates are in MHz, `dt` in µs, `theta` is the local-oscillator phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct SystemParams {
    gamma_e: f64,
    gamma_g: f64,
    omega: f64,
    theta: f64,
    dt: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    gamma_e: f64,
    gamma_g: f64,
    omega: f64,
    theta: f64,
    dt: f64,
}

impl TryFrom<RawParams> for SystemParams {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        SystemParams::new(r.gamma_e, r.gamma_g, r.omega, r.theta, r.dt)
    }
}

impl From<SystemParams> for RawParams {
    fn from(p: SystemParams) -> Self {
        RawParams { gamma_e: p.gamma_e, gamma_g: p.gamma_g, omega: p.omega, theta: p.theta, dt: p.dt }
    }
}

impl SystemParams {
    pub fn new(gamma_e: f64, gamma_g: f64, omega: f64, theta: f64, dt: f64) -> Result<Self> {
        for (name, v) in [("gamma_e", gamma_e), ("gamma_g", gamma_g), ("omega", omega), ("theta", theta), ("dt", dt)] {
            if !v.is_finite() {
                return Err(invalid(name, format!("must be finite, got {v}")));
            }
        }
        if gamma_e < 0.0 {
            return Err(invalid("gamma_e", format!("must be non-negative, got {gamma_e}")));
        }
        if gamma_g < 0.0 {
            return Err(invalid("gamma_g", format!("must be non-negative, got {gamma_g}")));
        }
        if dt <= 0.0 {
            return Err(invalid("dt", format!("must be positive, got {dt}")));
        }
        if gamma_e * dt > MARKOV_LIMIT {
            return Err(invalid("gamma_e", format!("gamma_e*dt = {} exceeds {MARKOV_LIMIT}", gamma_e * dt)));
        }
        if gamma_g * dt > MARKOV_LIMIT {
            return Err(invalid("gamma_g", format!("gamma_g*dt = {} exceeds {MARKOV_LIMIT}", gamma_g * dt)));
        }
        Ok(Self { gamma_e, gamma_g, omega, theta, dt })
    }

    pub fn gamma_e(&self) -> f64 {
        self.gamma_e
    }
    pub fn gamma_g(&self) -> f64 {
        self.gamma_g
    }
    pub fn omega(&self) -> f64 {
        self.omega
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `γ = γ_e − γ_g`, the combination that appears in the Bloch drift.
    pub fn gamma(&self) -> f64 {
        self.gamma_e - self.gamma_g
    }

    /// Emission probability per step on the `|f⟩ → |e⟩` channel.
    pub fn p_e(&self) -> f64 {
        self.gamma_e * self.dt
    }

    /// Emission probability per step on the `|e⟩ → |g⟩` channel.
    pub fn p_g(&self) -> f64 {
        self.gamma_g * self.dt
    }

    /// Gaussian normalization `N = √(dt/2π)` of the homodyne record density.
    pub fn record_norm(&self) -> f64 {
        (self.dt / (2.0 * std::f64::consts::PI)).sqrt()
    }

    pub fn with_omega(&self, omega: f64) -> Result<Self> {
        Self::new(self.gamma_e, self.gamma_g, omega, self.theta, self.dt)
    }
    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        Self::new(self.gamma_e, self.gamma_g, self.omega, theta, self.dt)
    }
    pub fn with_dt(&self, dt: f64) -> Result<Self> {
        Self::new(self.gamma_e, self.gamma_g, self.omega, self.theta, dt)
    }
    pub fn with_rates(&self, gamma_e: f64, gamma_g: f64) -> Result<Self> {
        Self::new(gamma_e, gamma_g, self.omega, self.theta, self.dt)
    }
}

/// Axis of the coherent `|f⟩–|e⟩` drive on the qubit Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriveAxis {
    X,
    Y,
}

impl DriveAxis {
    pub const BOTH: [DriveAxis; 2] = [DriveAxis::X, DriveAxis::Y];
}

impl fmt::Display for DriveAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DriveAxis::X => write!(f, "x"),
            DriveAxis::Y => write!(f, "y"),
        }
    }
}

impl FromStr for DriveAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(DriveAxis::X),
            "y" => Ok(DriveAxis::Y),
            other => Err(invalid("axis", format!("expected `x` or `y`, got `{other}`"))),
        }
    }
}
