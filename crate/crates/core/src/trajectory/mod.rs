//! Stochastic measurement trajectories and their ensemble averages.
//!
//! Two pipelines are kept separate. The jump-aware pipeline applies the full
//! three-level hybrid Kraus update and records `|e⟩ → |g⟩` jumps. The
//! no-jump pipeline integrates the qubit Bloch equations in Stratonovich or
//! Itô form (or with the `K_H` update alone), which is where the
//! post-selected dynamics departs from the Liouvillian near the
//! exceptional point.

pub mod ensemble;
pub mod kraus_step;
pub mod record;
pub mod rng;
pub mod sde;

pub use ensemble::{
    collect_records, postselect, run_ensemble, simulate_ensemble, simulate_sde_ensemble, EnsembleStats, PostSelect,
    Stat,
};
pub use kraus_step::{sample_step, simulate_trajectory, KrausStepper, StepOutcome};
pub use record::{EnsembleSample, TrajectoryRecord};
pub use rng::{trajectory_rng, TrajectoryRng};
pub use sde::{
    bloch_step_ito, bloch_step_stratonovich, heun_step, integrate_bloch, measurement_record, simulate_sde,
    wiener_increments, Forcing, JumpPolicy, SdeOptions, SdeScheme,
};
