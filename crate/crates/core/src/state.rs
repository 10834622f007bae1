//! Three-level density matrices and qubit Bloch vectors.

use std::ops::{Add, Mul, Sub};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::basis::{c, Mat2, Mat3, C64, E, F, G, I, ZERO};
use crate::error::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-12;

/// Density matrix of the three-level system in the `(|f⟩, |e⟩, |g⟩)` basis.
///
/// May be sub-normalized before an update is renormalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix3(Mat3);

impl DensityMatrix3 {
    /// Validates Hermiticity, positivity and `0 < tr ρ ≤ 1`.
    pub fn from_matrix(m: Mat3) -> Result<Self> {
        let herm = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = m.trace().re;
        if !(tr > 0.0 && tr <= 1.0 + TRACE_TOL) {
            return Err(Error::InvalidState(format!("trace {tr} outside (0, 1]")));
        }
        let rho = Self(m);
        let min_eig = rho.min_eigenvalue();
        if min_eig < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(m: Mat3) -> Self {
        Self(m)
    }

    /// Projector onto one of the basis levels.
    pub fn basis(level: usize) -> Self {
        let mut m = Mat3::zeros();
        m[(level, level)] = c(1.0);
        Self(m)
    }

    pub fn excited_f() -> Self {
        Self::basis(F)
    }

    pub fn ground() -> Self {
        Self::basis(G)
    }

    /// Projector onto a state vector given in `(|f⟩, |e⟩, |g⟩)` order. The
    /// vector is normalized first.
    pub fn pure(psi: Vector3<C64>) -> Result<Self> {
        let n = psi.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let psi = psi / c(n);
        Ok(Self(psi * psi.adjoint()))
    }

    /// Manifold state `ρ = (1 + q·σ)/2` on `|f⟩–|e⟩` with `ρ_gg = 0`.
    pub fn from_bloch(q: BlochVector) -> Result<Self> {
        if q.norm() > 1.0 + 1e-9 {
            return Err(Error::InvalidState(format!("Bloch vector norm {} > 1", q.norm())));
        }
        let mut m = Mat3::zeros();
        m[(F, F)] = c(0.5 * (1.0 + q.z));
        m[(E, E)] = c(0.5 * (1.0 - q.z));
        m[(F, E)] = C64::new(0.5 * q.x, -0.5 * q.y);
        m[(E, F)] = C64::new(0.5 * q.x, 0.5 * q.y);
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// `(P_f, P_e, P_g)`.
    pub fn populations(&self) -> [f64; 3] {
        [self.0[(F, F)].re, self.0[(E, E)].re, self.0[(G, G)].re]
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (self.0 + self.0.adjoint()) * c(0.5);
        h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn hermiticity_error(&self) -> f64 {
        (self.0 - self.0.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn normalized(&self) -> Result<Self> {
        let tr = self.trace();
        if !(tr > 1e-300) {
            return Err(Error::ImpossibleOutcome(tr));
        }
        Ok(Self(self.0 / c(tr)))
    }

    /// Applies `ρ → U K ρ K† U† / tr(·)`.
    pub fn apply_update(&self, kraus: &Mat3, unitary: &Mat3) -> Result<Self> {
        let a = unitary * kraus;
        let m = a * self.0 * a.adjoint();
        let tr = m.trace().re;
        if !(tr > 1e-300) {
            return Err(Error::ImpossibleOutcome(tr));
        }
        // Hermitize against rounding drift.
        let m = (m + m.adjoint()) * c(0.5 / tr);
        Ok(Self(m))
    }

    /// Bloch vector of the normalized `|f⟩–|e⟩` block.
    pub fn bloch(&self) -> Result<BlochVector> {
        BlochVector::from_qubit(&self.manifold_block())
    }

    /// The `|f⟩–|e⟩` block as a qubit matrix (not renormalized).
    pub fn manifold_block(&self) -> Mat2 {
        Mat2::new(self.0[(F, F)], self.0[(F, E)], self.0[(E, F)], self.0[(E, E)])
    }

    /// Normalized population `ρ_ff / (ρ_ff + ρ_ee)`; `None` if the manifold is empty.
    pub fn normalized_pf(&self) -> Option<f64> {
        let [pf, pe, _] = self.populations();
        let n = pf + pe;
        (n > 1e-12).then(|| pf / n)
    }
}

/// Projector of `c_f|f⟩ + c_e|e⟩ + c_g|g⟩`.
pub fn density_from_amplitudes(c_g: C64, c_e: C64, c_f: C64) -> Result<DensityMatrix3> {
    let total = c_g.norm_sqr() + c_e.norm_sqr() + c_f.norm_sqr();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized(total));
    }
    let mut psi = Vector3::from_element(ZERO);
    psi[F] = c_f;
    psi[E] = c_e;
    psi[G] = c_g;
    Ok(DensityMatrix3(psi * psi.adjoint()))
}

/// Bloch vector of the `|f⟩–|e⟩` qubit.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const F: BlochVector = BlochVector { x: 0.0, y: 0.0, z: 1.0 };
    pub const E: BlochVector = BlochVector { x: 0.0, y: 0.0, z: -1.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self { x: a[0], y: a[1], z: a[2] }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn distance(&self, other: &BlochVector) -> f64 {
        (*self - *other).norm()
    }

    pub fn max_abs_diff(&self, other: &BlochVector) -> f64 {
        let d = *self - *other;
        d.x.abs().max(d.y.abs()).max(d.z.abs())
    }

    /// Bloch vector of a (possibly unnormalized) qubit matrix in the
    /// `(|f⟩, |e⟩)` basis.
    pub fn from_qubit(m: &Mat2) -> Result<Self> {
        let n = m[(0, 0)].re + m[(1, 1)].re;
        if !(n > 1e-12) {
            return Err(Error::ManifoldDepleted(n));
        }
        let (fe, ef) = (m[(0, 1)], m[(1, 0)]);
        Ok(Self { x: (fe + ef).re / n, y: (I * (fe - ef)).re / n, z: (m[(0, 0)].re - m[(1, 1)].re) / n })
    }

    /// Unit-trace qubit matrix `(1 + q·σ)/2`.
    pub fn to_qubit(&self) -> Mat2 {
        let fe = C64::new(self.x, -self.y) * 0.5;
        Mat2::new(c(0.5 * (1.0 + self.z)), fe, fe.conj(), c(0.5 * (1.0 - self.z)))
    }

    /// `(P_f, P_e)` of the corresponding manifold state.
    pub fn populations(&self) -> (f64, f64) {
        (0.5 * (1.0 + self.z), 0.5 * (1.0 - self.z))
    }
}

impl Add for BlochVector {
    type Output = BlochVector;
    fn add(self, o: BlochVector) -> BlochVector {
        BlochVector::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for BlochVector {
    type Output = BlochVector;
    fn sub(self, o: BlochVector) -> BlochVector {
        BlochVector::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for BlochVector {
    type Output = BlochVector;
    fn mul(self, s: f64) -> BlochVector {
        BlochVector::new(self.x * s, self.y * s, self.z * s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::ket_bra;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn amplitudes_give_basis_projectors() {
        let f = density_from_amplitudes(ZERO, ZERO, c(1.0)).unwrap();
        assert_eq!(f.populations(), [1.0, 0.0, 0.0]);
        let g = density_from_amplitudes(c(1.0), ZERO, ZERO).unwrap();
        assert_eq!(g.populations(), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn equal_superposition_has_unit_x() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rho = density_from_amplitudes(ZERO, c(s), c(s)).unwrap();
        let m = rho.matrix();
        for (i, j) in [(F, F), (E, E), (F, E), (E, F)] {
            assert!(close(m[(i, j)].re, 0.5, 1e-15) && m[(i, j)].im == 0.0);
        }
        let q = rho.bloch().unwrap();
        assert!(close(q.x, 1.0, 1e-15) && close(q.y, 0.0, 1e-15) && close(q.z, 0.0, 1e-15));
        assert!(close(rho.trace(), 1.0, 1e-15) && close(rho.purity(), 1.0, 1e-15));
    }

    #[test]
    fn rejects_unnormalized_amplitudes() {
        assert!(matches!(density_from_amplitudes(c(1.0), c(1.0), ZERO), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn qubit_round_trip() {
        let q = BlochVector::new(0.3, -0.4, 0.5);
        let back = BlochVector::from_qubit(&q.to_qubit()).unwrap();
        assert!(back.max_abs_diff(&q) < 1e-15);
        let rho = DensityMatrix3::from_bloch(q).unwrap();
        assert!((rho.manifold_block() - q.to_qubit()).norm() < 1e-15);
    }

    #[test]
    fn bloch_of_basis_and_mixture() {
        assert_eq!(DensityMatrix3::basis(F).bloch().unwrap(), BlochVector::new(0.0, 0.0, 1.0));
        assert_eq!(DensityMatrix3::basis(E).bloch().unwrap(), BlochVector::new(0.0, 0.0, -1.0));
        let mix =
            DensityMatrix3::from_matrix(Mat3::from_diagonal(&nalgebra::Vector3::new(c(0.5), c(0.5), ZERO))).unwrap();
        assert_eq!(mix.bloch().unwrap(), BlochVector::new(0.0, 0.0, 0.0));
        assert!(matches!(DensityMatrix3::ground().bloch(), Err(Error::ManifoldDepleted(_))));
    }

    #[test]
    fn y_component_sign() {
        // (|f⟩ + i|e⟩)/√2 is the +y eigenstate of σ_y with |f⟩ as "up".
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rho = density_from_amplitudes(ZERO, C64::new(0.0, s), c(s)).unwrap();
        let q = rho.bloch().unwrap();
        assert!(close(q.y, 1.0, 1e-15) && close(q.x, 0.0, 1e-15));
    }

    #[test]
    fn from_bloch_round_trips() {
        let q = BlochVector::new(0.3, -0.4, 0.5);
        let rho = DensityMatrix3::from_bloch(q).unwrap();
        assert!(rho.bloch().unwrap().max_abs_diff(&q) < 1e-15);
        assert!(DensityMatrix3::from_matrix(*rho.matrix()).is_ok());
    }

    #[test]
    fn identity_update_is_noop() {
        let rho = DensityMatrix3::from_bloch(BlochVector::new(0.6, 0.0, 0.8)).unwrap();
        let id = Mat3::identity();
        let out = rho.apply_update(&id, &id).unwrap();
        assert!((out.matrix() - rho.matrix()).norm() < 1e-15);
    }

    #[test]
    fn jump_collapses_e_and_annihilates_f() {
        let kj = ket_bra(G, E);
        let id = Mat3::identity();
        let out = DensityMatrix3::basis(E).apply_update(&kj, &id).unwrap();
        assert_eq!(out.populations(), [0.0, 0.0, 1.0]);
        assert!(matches!(DensityMatrix3::basis(F).apply_update(&kj, &id), Err(Error::ImpossibleOutcome(_))));
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        let mut m = Mat3::zeros();
        m[(F, E)] = c(0.5);
        m[(F, F)] = c(1.0);
        assert!(DensityMatrix3::from_matrix(m).is_err());
        let neg = Mat3::from_diagonal(&nalgebra::Vector3::new(c(1.2), c(-0.2), ZERO));
        assert!(DensityMatrix3::from_matrix(neg).is_err());
        assert!(DensityMatrix3::from_matrix(Mat3::zeros()).is_err());
    }
}
