//! Liouvillian of the post-selected `|f⟩–|e⟩` qubit.
//!
//! Qubit density matrices are vectorized row-major as
//! `(ρ_ff, ρ_fe, ρ_ef, ρ_ee)`, so `vec(AρB) = (A ⊗ Bᵀ) vec(ρ)` and
//!
//! ```text
//! 𝓛 = −i(H⊗I − I⊗Hᵀ) − γ_g/2 (P_e⊗I + I⊗P_e) − γ_e/2 (P_f⊗I + I⊗P_f) + γ_e σ₋⊗σ₋
//! ```
//!
//! with `σ₋ = |e⟩⟨f|`. Dropping the `|e⟩ → |g⟩` recycling term makes the
//! generator trace-decreasing: `d tr ρ/dt = −γ_g ρ_ee`.

use nalgebra::{Matrix2, Matrix4, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{c, ket_bra, Mat2, Mat3, C64, E, F, G, I, ONE, ZERO};
use crate::drive::drive_hamiltonian;
use crate::eigen;
use crate::error::{invalid, Error, Result};
use crate::ode::{evolve_ode, Generator, TimeGrid};
use crate::params::{DriveAxis, SystemParams};
use crate::state::DensityMatrix3;

pub type Mat4 = Matrix4<C64>;
pub type Vec4 = Vector4<C64>;

/// Conditioning of the eigenvector matrix below which the spectral
/// decomposition is refused.
pub const EP_CONDITIONING_THRESHOLD: f64 = 1e-6;

pub fn vectorize(rho: &Mat2) -> Vec4 {
    Vec4::new(rho[(0, 0)], rho[(0, 1)], rho[(1, 0)], rho[(1, 1)])
}

pub fn unvectorize(v: &Vec4) -> Mat2 {
    Mat2::new(v[0], v[1], v[2], v[3])
}

fn qubit_hamiltonian(omega: f64, axis: DriveAxis) -> Mat2 {
    drive_hamiltonian(omega, axis).fixed_view::<2, 2>(F, F).into_owned()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiouvillianMatrix {
    entries: Mat4,
    gamma_e: f64,
    gamma_g: f64,
    omega: f64,
    axis: DriveAxis,
}

impl LiouvillianMatrix {
    /// Builds `𝓛` from rates and drive strength alone (no time step needed).
    pub fn from_rates(gamma_e: f64, gamma_g: f64, omega: f64, axis: DriveAxis) -> Result<Self> {
        for (name, v) in [("gamma_e", gamma_e), ("gamma_g", gamma_g)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(name, format!("must be finite and non-negative, got {v}")));
            }
        }
        if !omega.is_finite() {
            return Err(invalid("omega", format!("must be finite, got {omega}")));
        }
        let id = Mat2::identity();
        let h = qubit_hamiltonian(omega, axis);
        let pf = Matrix2::new(ONE, ZERO, ZERO, ZERO);
        let pe = Matrix2::new(ZERO, ZERO, ZERO, ONE);
        let lower = Matrix2::new(ZERO, ZERO, ONE, ZERO);
        let entries = (h.kronecker(&id) - id.kronecker(&h.transpose())) * (-I)
            - (pe.kronecker(&id) + id.kronecker(&pe)) * c(gamma_g / 2.0)
            - (pf.kronecker(&id) + id.kronecker(&pf)) * c(gamma_e / 2.0)
            + lower.kronecker(&lower) * c(gamma_e);
        Ok(Self { entries, gamma_e, gamma_g, omega, axis })
    }

    pub fn entries(&self) -> &Mat4 {
        &self.entries
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

    pub fn axis(&self) -> DriveAxis {
        self.axis
    }

    pub fn apply(&self, rho: &Mat2) -> Mat2 {
        unvectorize(&(self.entries * vectorize(rho)))
    }

    /// Eigenvalues sorted by descending real part, then descending imaginary part.
    pub fn eigenvalues(&self) -> [C64; 4] {
        eigen::eigenvalues(&self.entries)
    }
}

pub fn build_liouvillian(p: &SystemParams, axis: DriveAxis) -> LiouvillianMatrix {
    LiouvillianMatrix::from_rates(p.gamma_e(), p.gamma_g(), p.omega(), axis)
        .expect("SystemParams are already validated")
}

impl Generator for LiouvillianMatrix {
    type State = Mat2;
    fn rate(&self, s: &Mat2) -> Mat2 {
        self.apply(s)
    }
}

/// `dρ/dt = 𝓛ρ + γ_g ρ_ee ρ`: the deterministic part of the normalized
/// master equation, which keeps `tr ρ = 1`.
#[derive(Debug, Clone, Copy)]
pub struct NormalizedLiouvillian<'a>(pub &'a LiouvillianMatrix);

impl Generator for NormalizedLiouvillian<'_> {
    type State = Mat2;
    fn rate(&self, s: &Mat2) -> Mat2 {
        self.0.apply(s) + s * c(self.0.gamma_g * s[(1, 1)].re)
    }
}

/// Full three-level Lindblad generator
/// `−i[H, ρ] + γ_g D[|g⟩⟨e|]ρ + γ_e D[|e⟩⟨f|]ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreeLevelLindblad {
    hamiltonian: Mat3,
    jumps: [Mat3; 2],
}

impl ThreeLevelLindblad {
    pub fn new(p: &SystemParams, axis: DriveAxis) -> Self {
        Self {
            hamiltonian: drive_hamiltonian(p.omega(), axis),
            jumps: [ket_bra(G, E) * c(p.gamma_g().sqrt()), ket_bra(E, F) * c(p.gamma_e().sqrt())],
        }
    }
}

impl Generator for ThreeLevelLindblad {
    type State = Mat3;
    fn rate(&self, rho: &Mat3) -> Mat3 {
        let h = &self.hamiltonian;
        let mut out = (h * rho - rho * h) * (-I);
        for l in &self.jumps {
            let ldl = l.adjoint() * l;
            out += l * rho * l.adjoint() - (ldl * rho + rho * ldl) * c(0.5);
        }
        out
    }
}

/// RK4 reference for the qubit block under the linear (trace-decreasing) generator.
pub fn evolve_qubit(l: &LiouvillianMatrix, rho0: &Mat2, grid: &TimeGrid) -> Result<Vec<Mat2>> {
    evolve_ode(l, *rho0, grid)
}

/// RK4 reference for the normalized qubit evolution; every element has unit trace.
pub fn evolve_normalized(l: &LiouvillianMatrix, rho0: &Mat2, grid: &TimeGrid) -> Result<Vec<Mat2>> {
    let tr = (rho0[(0, 0)] + rho0[(1, 1)]).re;
    if !(tr > 1e-12) {
        return Err(Error::ManifoldDepleted(tr));
    }
    evolve_ode(&NormalizedLiouvillian(l), rho0 / c(tr), grid)
}

/// Ensemble-averaged three-level dynamics (no post-selection).
pub fn evolve_three_level(
    p: &SystemParams,
    axis: DriveAxis,
    rho0: &DensityMatrix3,
    grid: &TimeGrid,
) -> Result<Vec<DensityMatrix3>> {
    let states = evolve_ode(&ThreeLevelLindblad::new(p, axis), *rho0.matrix(), grid)?;
    Ok(states.into_iter().map(DensityMatrix3::from_matrix_unchecked).collect())
}

/// Biorthonormal eigen-decomposition of `𝓛` with weights for one initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct LiouvillianSpectrum {
    pub eigenvalues: [C64; 4],
    /// Right eigenvectors reshaped to 2×2, unit Frobenius norm.
    pub right: [Mat2; 4],
    /// Left eigenvectors with `Tr[L_j R_k] = δ_jk`.
    pub left: [Mat2; 4],
    /// `C_k = Tr[L_k ρ(0)]`.
    pub weights: [C64; 4],
    /// Smallest singular value of the right-eigenvector matrix.
    pub conditioning: f64,
}

pub fn spectral_decompose(l: &LiouvillianMatrix, rho0: &Mat2) -> Result<LiouvillianSpectrum> {
    let es = eigen::eigensystem(&l.entries).map_err(|conditioning| Error::EpDegenerate { conditioning })?;
    if es.conditioning < EP_CONDITIONING_THRESHOLD {
        return Err(Error::EpDegenerate { conditioning: es.conditioning });
    }
    let v0 = vectorize(rho0);
    let right = std::array::from_fn(|k| unvectorize(&es.right.column(k).into_owned()));
    let left = std::array::from_fn(|k| unvectorize(&es.left.row(k).transpose()).transpose());
    let weights = std::array::from_fn(|k| (es.left.row(k) * v0)[(0, 0)]);
    Ok(LiouvillianSpectrum { eigenvalues: es.values, right, left, weights, conditioning: es.conditioning })
}

impl LiouvillianSpectrum {
    /// `ρ(t) = Σ_k C_k e^{λ_k t} R_k`.
    pub fn evolve(&self, t: f64) -> Mat2 {
        (0..4).fold(Mat2::zeros(), |acc, k| acc + self.right[k] * (self.weights[k] * (self.eigenvalues[k] * t).exp()))
    }

    /// `max_jk |Tr[L_j R_k] − δ_jk|`.
    pub fn biorthonormality_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..4 {
            for k in 0..4 {
                let target = if j == k { ONE } else { ZERO };
                worst = worst.max(((self.left[j] * self.right[k]).trace() - target).norm());
            }
        }
        worst
    }
}

pub fn evolve_spectral(s: &LiouvillianSpectrum, t: f64) -> Result<Mat2> {
    if !(t >= 0.0) {
        return Err(invalid("t", format!("must be non-negative, got {t}")));
    }
    Ok(s.evolve(t))
}

/// Spectrum at one drive strength together with the branch-pair diagnostics
/// used to locate the exceptional point.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumPoint {
    pub omega: f64,
    pub eigenvalues: [C64; 4],
    /// `|λ_i − λ_j|` for the pair with the most parallel eigenvectors.
    pub gap: f64,
    /// `|⟨R_i, R_j⟩| / (‖R_i‖ ‖R_j‖)` for that pair.
    pub overlap: f64,
}

pub fn spectrum_point(gamma_e: f64, gamma_g: f64, omega: f64, axis: DriveAxis) -> Result<SpectrumPoint> {
    let l = LiouvillianMatrix::from_rates(gamma_e, gamma_g, omega, axis)?;
    let eigenvalues = l.eigenvalues();
    let (gap, overlap) = match eigen::right_eigenvectors(&l.entries, &eigenvalues) {
        None => (0.0, 1.0),
        Some(r) => {
            let mut best = (f64::INFINITY, -1.0);
            for i in 0..4 {
                for j in (i + 1)..4 {
                    let ov = (r.column(i).adjoint() * r.column(j))[(0, 0)].norm();
                    let gap = (eigenvalues[i] - eigenvalues[j]).norm();
                    if ov > best.1 + 1e-12 || ((ov - best.1).abs() <= 1e-12 && gap < best.0) {
                        best = (gap, ov);
                    }
                }
            }
            best
        }
    };
    Ok(SpectrumPoint { omega, eigenvalues, gap, overlap })
}

/// Spectra on a set of drive strengths, evaluated in parallel.
pub fn scan_spectrum(gamma_e: f64, gamma_g: f64, axis: DriveAxis, omegas: &[f64]) -> Result<Vec<SpectrumPoint>> {
    omegas.par_iter().map(|&w| spectrum_point(gamma_e, gamma_g, w, axis)).collect()
}

/// `n` evenly spaced points over `[lo, hi]`, endpoints included.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpOptions {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    /// Width of the final bracketing interval.
    pub tol: f64,
}

impl Default for EpOptions {
    fn default() -> Self {
        Self { lo: 0.05, hi: 3.0, points: 400, tol: 1e-4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalPoint {
    pub omega_ep: f64,
    pub gap: f64,
    pub overlap: f64,
}

/// Locates the exceptional point in `omega_range` with the default scan density.
pub fn find_ep(gamma_e: f64, gamma_g: f64, omega_range: (f64, f64), axis: DriveAxis) -> Result<ExceptionalPoint> {
    let opts = EpOptions { lo: omega_range.0, hi: omega_range.1, ..EpOptions::default() };
    find_ep_with(gamma_e, gamma_g, axis, &opts)
}

/// Dense gap scan followed by golden-section refinement around the interior minimum.
pub fn find_ep_with(gamma_e: f64, gamma_g: f64, axis: DriveAxis, opts: &EpOptions) -> Result<ExceptionalPoint> {
    if !(opts.lo > 0.0 && opts.hi > opts.lo && opts.hi.is_finite()) {
        return Err(invalid("omega_range", format!("need 0 < lo < hi, got [{}, {}]", opts.lo, opts.hi)));
    }
    if opts.points < 3 {
        return Err(invalid("points", "need at least 3 scan points"));
    }
    if !(opts.tol > 0.0) {
        return Err(invalid("tol", format!("must be positive, got {}", opts.tol)));
    }
    let not_found = Error::EpNotFound { lo: opts.lo, hi: opts.hi };
    let omegas = linspace(opts.lo, opts.hi, opts.points);
    let scan = scan_spectrum(gamma_e, gamma_g, axis, &omegas)?;
    let k = scan.iter().enumerate().fold(0, |best, (i, s)| if s.gap < scan[best].gap { i } else { best });
    if k == 0 || k == scan.len() - 1 || !(scan[k].gap < scan[k - 1].gap && scan[k].gap < scan[k + 1].gap) {
        return Err(not_found);
    }
    let gap_at = |w: f64| spectrum_point(gamma_e, gamma_g, w, axis).map(|s| s.gap);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (omegas[k - 1], omegas[k + 1]);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (gap_at(x1)?, gap_at(x2)?);
    while b - a > opts.tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = gap_at(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = gap_at(x2)?;
        }
    }
    let best = spectrum_point(gamma_e, gamma_g, 0.5 * (a + b), axis)?;
    Ok(ExceptionalPoint { omega_ep: best.omega, gap: best.gap, overlap: best.overlap })
}
