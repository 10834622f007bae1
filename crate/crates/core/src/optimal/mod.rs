//! Most-likely paths from extremizing the stochastic action.

pub mod dual;
pub mod hamiltonian;
pub mod path;
pub mod reduced;

pub use hamiltonian::{
    cost_function, drift_field, hamilton_rhs, hamiltonian, optimal_record, record_gradient, PhasePoint,
};
pub use path::{action_functional, integrate_path, shoot, shoot_with, PathSolution, ShootOptions, PATH_DT};
pub use reduced::{
    find_fixed_points, flow_1d, momenta_at_energy, phase_portrait, record_1d, reduce_1d, Coefficients, Contour,
    FixedPoint, FixedPointKind, PortraitRow, Reduced1DState,
};
