//! Quantum trajectories, Liouvillian spectra and most-likely paths for a
//! post-selected non-Hermitian qubit under continuous homodyne detection.
//!
//! The qubit is the `|f⟩–|e⟩` manifold of a three-level system whose
//! `|e⟩ → |g⟩` decay is discarded by post-selection. See [`basis`] for the
//! matrix and Bloch-sphere conventions used throughout.

// `!(x > 0.0)` deliberately rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod drive;
mod eigen;
pub mod error;
pub mod kraus;
pub mod liouvillian;
pub mod ode;
pub mod optimal;
pub mod params;
pub mod quadrature;
pub mod state;
pub mod trajectory;

pub use error::{Error, Result};
pub use params::{DriveAxis, SystemParams};
pub use state::{density_from_amplitudes, BlochVector, DensityMatrix3};
