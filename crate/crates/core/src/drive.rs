//! Coherent drive on the `|f⟩–|e⟩` manifold.

use crate::basis::{c, Mat3, E, F, I};
use crate::params::DriveAxis;

/// Drive Hamiltonian `ω(|f⟩⟨e| + |e⟩⟨f|)` (x) or `ω(−i|f⟩⟨e| + i|e⟩⟨f|)` (y).
pub fn drive_hamiltonian(omega: f64, axis: DriveAxis) -> Mat3 {
    let mut h = Mat3::zeros();
    let (fe, ef) = match axis {
        DriveAxis::X => (c(1.0), c(1.0)),
        DriveAxis::Y => (-I, I),
    };
    h[(F, E)] = fe * omega;
    h[(E, F)] = ef * omega;
    h
}

/// Exact `exp(−i H dt)` of the drive Hamiltonian.
///
/// On the manifold `H = ω σ` with `σ² = 1`, so the exponential is
/// `cos(ω dt) − i sin(ω dt) σ`; `|g⟩` is left untouched.
pub fn drive_unitary(omega: f64, dt: f64, axis: DriveAxis) -> Mat3 {
    let phase = omega * dt;
    let (s, co) = phase.sin_cos();
    let sigma = drive_hamiltonian(1.0, axis);
    let mut u = Mat3::identity();
    u[(F, F)] = c(co);
    u[(E, E)] = c(co);
    u[(F, E)] = -I * sigma[(F, E)] * s;
    u[(E, F)] = -I * sigma[(E, F)] * s;
    u
}

#[cfg(test)]
pub(crate) fn unitarity_error(u: &Mat3) -> f64 {
    (u.adjoint() * u - Mat3::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
