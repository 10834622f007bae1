//! Shared conventions for every matrix in the crate.
//!
//! * Three-level matrices use the basis order `(|f⟩, |e⟩, |g⟩)`, so index 0
//!   is the second excited state and index 2 the ground state. The
//!   `(e, f)` entry (row 1, column 0) couples `|f⟩ → |e⟩`.
//! * Qubit matrices on the `|f⟩–|e⟩` manifold use `(|f⟩, |e⟩)`.
//! * Vectorized qubit densities are row-major: `(ρ_ff, ρ_fe, ρ_ef, ρ_ee)`,
//!   so `vec(A ρ B) = (A ⊗ Bᵀ) vec(ρ)`.
//! * Bloch components on the manifold:
//!   `x = (ρ_fe + ρ_ef)/n`, `y = i(ρ_fe − ρ_ef)/n`, `z = (ρ_ff − ρ_ee)/n`
//!   with `n = ρ_ff + ρ_ee`; `z = +1` is `|f⟩`.
//! * Rates are in MHz and times in µs. No factor of 2π is inserted anywhere:
//!   `γ·dt` and `ω·dt` are used as dimensionless numbers directly.

use nalgebra::{Matrix2, Matrix3};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Mat3 = Matrix3<C64>;
pub type Mat2 = Matrix2<C64>;

/// Index of `|f⟩` in three-level matrices.
pub const F: usize = 0;
/// Index of `|e⟩`.
pub const E: usize = 1;
/// Index of `|g⟩`.
pub const G: usize = 2;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// `|row⟩⟨col|` in the three-level basis.
pub fn ket_bra(row: usize, col: usize) -> Mat3 {
    let mut m = Mat3::zeros();
    m[(row, col)] = ONE;
    m
}
