//! Measurement operators for the two detection schemes.
//!
//! Photon counting resolves both emissions (`K₀`, `K₁ₑ`, `K₁g`). The hybrid
//! scheme weakly monitors `|f⟩ → |e⟩` with homodyne detection (record `r`,
//! operator `K_H(r)`) and counts `|e⟩ → |g⟩` clicks (`K_J`).

use serde::{Deserialize, Serialize};

use crate::basis::{c, Mat3, C64, E, F, G};
use crate::params::SystemParams;
use crate::quadrature::CompositeRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    PhotonCounting,
    Hybrid,
}

/// Outcome labels of a single detection interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    /// `K₀`: no photon in either channel.
    NoClick,
    /// `K₁ₑ`: photon from `|f⟩ → |e⟩`.
    ClickFe,
    /// `K₁g`: photon from `|e⟩ → |g⟩`.
    ClickEg,
    /// `K_H(r)`: homodyne record, no ground-state jump.
    Homodyne,
    /// `K_J`: ground-state jump registered.
    Jump,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    pub scheme: Scheme,
    /// Homodyne record the hybrid operators were evaluated at.
    pub record: Option<f64>,
    pub operators: Vec<(Outcome, Mat3)>,
}

impl KrausSet {
    pub fn get(&self, outcome: Outcome) -> Option<&Mat3> {
        self.operators.iter().find(|(o, _)| *o == outcome).map(|(_, m)| m)
    }

    /// `Σ K†K` over the operators held in the set.
    pub fn effect_sum(&self) -> Mat3 {
        self.operators.iter().fold(Mat3::zeros(), |acc, (_, k)| acc + k.adjoint() * k)
    }
}

/// `K₀ = diag(√(1−p_e), √(1−p_g), 1)`, `K₁ₑ = √p_e |e⟩⟨f|`, `K₁g = √p_g |g⟩⟨e|`.
pub fn build_photon_counting_kraus(p: &SystemParams) -> KrausSet {
    let (pe, pg) = (p.p_e(), p.p_g());
    let mut k0 = Mat3::identity();
    k0[(F, F)] = c((1.0 - pe).sqrt());
    k0[(E, E)] = c((1.0 - pg).sqrt());
    let mut k1e = Mat3::zeros();
    k1e[(E, F)] = c(pe.sqrt());
    let mut k1g = Mat3::zeros();
    k1g[(G, E)] = c(pg.sqrt());
    KrausSet {
        scheme: Scheme::PhotonCounting,
        record: None,
        operators: vec![(Outcome::NoClick, k0), (Outcome::ClickFe, k1e), (Outcome::ClickEg, k1g)],
    }
}

/// Scalar prefactor `√N e^{−r² dt/4}` shared by `K_H` and `K_J`.
pub fn record_prefactor(p: &SystemParams, r: f64) -> f64 {
    p.record_norm().sqrt() * (-r * r * p.dt() / 4.0).exp()
}

/// `K_H(r)` without the scalar prefactor; this is all a normalized update needs.
pub fn homodyne_matrix(p: &SystemParams, r: f64) -> Mat3 {
    let dt = p.dt();
    let mut m = Mat3::identity();
    m[(F, F)] = c((1.0 - p.gamma_e() * dt).sqrt());
    m[(E, E)] = c((1.0 - p.gamma_g() * dt).sqrt());
    m[(E, F)] = C64::from_polar(r * dt * p.gamma_e().sqrt(), -p.theta());
    m
}

/// `K_J` without the scalar prefactor: `√(γ_g dt) |g⟩⟨e|`.
pub fn jump_matrix(p: &SystemParams) -> Mat3 {
    let mut m = Mat3::zeros();
    m[(G, E)] = c(p.p_g().sqrt());
    m
}

/// Hybrid operators `K_H(r)` and `K_J(r)` including the Gaussian prefactor.
pub fn build_hybrid_kraus(p: &SystemParams, r: f64) -> KrausSet {
    let pref = c(record_prefactor(p, r));
    KrausSet {
        scheme: Scheme::Hybrid,
        record: Some(r),
        operators: vec![(Outcome::Homodyne, homodyne_matrix(p, r) * pref), (Outcome::Jump, jump_matrix(p) * pref)],
    }
}

fn frobenius_from_identity(m: &Mat3) -> f64 {
    (m - Mat3::identity()).norm()
}

/// `‖Σ K†K − I‖_F` for the photon-counting set.
pub fn photon_counting_residual(p: &SystemParams) -> f64 {
    frobenius_from_identity(&build_photon_counting_kraus(p).effect_sum())
}

/// `‖∫dr (K_H†K_H + K_J†K_J) − I‖_F` by composite Gauss–Legendre quadrature
/// over `r ∈ [−40/√dt, 40/√dt]`.
pub fn hybrid_completeness_residual(p: &SystemParams) -> f64 {
    let half_width = 40.0 / p.dt().sqrt();
    // 0.5σ panels with 10 nodes each resolve the Gaussian to machine precision.
    let rule = CompositeRule::new(-half_width, half_width, 160, 10);
    let mut acc = Mat3::zeros();
    for (&r, &w) in rule.nodes.iter().zip(&rule.weights) {
        acc += build_hybrid_kraus(p, r).effect_sum() * c(w);
    }
    frobenius_from_identity(&acc)
}
