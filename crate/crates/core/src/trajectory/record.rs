//! Per-trajectory output.

use crate::ode::TimeGrid;
use crate::state::{BlochVector, DensityMatrix3};

/// States a trajectory can store and the ensemble layer can average.
pub trait EnsembleSample: Clone + Send + Sync {
    /// `(P_f, P_e, P_g)`.
    fn populations(&self) -> [f64; 3];
    /// Bloch vector of the normalized `|f⟩–|e⟩` block, if it is populated.
    fn manifold_bloch(&self) -> Option<BlochVector>;
}

impl EnsembleSample for DensityMatrix3 {
    fn populations(&self) -> [f64; 3] {
        let tr = self.trace();
        self.populations().map(|x| x / tr)
    }
    fn manifold_bloch(&self) -> Option<BlochVector> {
        self.bloch().ok()
    }
}

impl EnsembleSample for BlochVector {
    fn populations(&self) -> [f64; 3] {
        let (pf, pe) = BlochVector::populations(self);
        [pf, pe, 0.0]
    }
    fn manifold_bloch(&self) -> Option<BlochVector> {
        Some(*self)
    }
}

/// One measurement trajectory on a uniform grid.
///
/// `records[k]` is the homodyne readout of the interval `[t_k, t_{k+1}]`
/// (`None` for the jump interval and everything after it). Density-matrix
/// records keep `|g⟩⟨g|` states after a jump; Bloch-vector records stop at
/// the last pre-jump state because `|g⟩` has no Bloch vector.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord<S> {
    pub grid: TimeGrid,
    pub states: Vec<S>,
    pub records: Vec<Option<f64>>,
    /// Index of the first post-jump grid point.
    pub jump_index: Option<usize>,
}

impl<S> TrajectoryRecord<S> {
    pub fn new(grid: TimeGrid, states: Vec<S>, records: Vec<Option<f64>>, jump_index: Option<usize>) -> Self {
        Self { grid, states, records, jump_index }
    }

    pub fn times(&self) -> Vec<f64> {
        self.grid.times()
    }

    pub fn jump_time(&self) -> Option<f64> {
        self.jump_index.map(|k| self.grid.time(k))
    }

    /// No `|e⟩ → |g⟩` jump over the whole record.
    pub fn survived(&self) -> bool {
        self.jump_index.is_none()
    }

    /// No jump up to and including grid point `k`.
    pub fn survived_at(&self, k: usize) -> bool {
        self.jump_index.is_none_or(|j| k < j)
    }

    pub fn final_state(&self) -> Option<&S> {
        if self.survived() {
            self.states.last()
        } else {
            None
        }
    }
}

impl TrajectoryRecord<DensityMatrix3> {
    /// Bloch-vector view, truncated at the jump.
    pub fn to_bloch(&self) -> TrajectoryRecord<BlochVector> {
        let end = self.jump_index.unwrap_or(self.states.len());
        let states =
            self.states[..end].iter().map(|r| r.bloch().expect("pre-jump state lies in the f-e manifold")).collect();
        TrajectoryRecord::new(self.grid, states, self.records.clone(), self.jump_index)
    }
}
