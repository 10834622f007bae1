//! Jump-aware trajectories from the hybrid Kraus operators.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::basis::{Mat3, C64, E, F};
use crate::drive::drive_unitary;
use crate::error::Result;
use crate::kraus::{homodyne_matrix, jump_matrix};
use crate::ode::TimeGrid;
use crate::params::{DriveAxis, SystemParams};
use crate::state::DensityMatrix3;

use super::record::TrajectoryRecord;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub jumped: bool,
    /// Homodyne record; absent on jump steps.
    pub record: Option<f64>,
    pub rho: DensityMatrix3,
}

/// Precomputed step data for one parameter set.
#[derive(Debug, Clone)]
pub struct KrausStepper {
    p: SystemParams,
    unitary: Mat3,
    jump: Mat3,
}

impl KrausStepper {
    pub fn new(p: &SystemParams, axis: DriveAxis) -> Self {
        Self { p: *p, unitary: drive_unitary(p.omega(), p.dt(), axis), jump: jump_matrix(p) }
    }

    /// `P_J = γ_g dt ρ_ee / tr ρ`, the Gaussian prefactor integrated over `r`.
    pub fn jump_probability(&self, rho: &DensityMatrix3) -> f64 {
        self.p.p_g() * rho.matrix()[(E, E)].re / rho.trace()
    }

    /// `√γ_e (ρ_fe e^{−iθ} + ρ_ef e^{iθ}) / tr ρ`.
    pub fn record_mean(&self, rho: &DensityMatrix3) -> f64 {
        let fe = rho.matrix()[(F, E)] * C64::from_polar(1.0, -self.p.theta());
        self.p.gamma_e().sqrt() * 2.0 * fe.re / rho.trace()
    }

    pub fn step<R: Rng + ?Sized>(&self, rho: &DensityMatrix3, rng: &mut R) -> Result<StepOutcome> {
        let pj = self.jump_probability(rho);
        let u: f64 = rng.random();
        if u < pj {
            let next = rho.apply_update(&self.jump, &self.unitary)?;
            return Ok(StepOutcome { jumped: true, record: None, rho: next });
        }
        let zeta: f64 = rng.sample(StandardNormal);
        let r = self.record_mean(rho) + zeta / self.p.dt().sqrt();
        let next = rho.apply_update(&homodyne_matrix(&self.p, r), &self.unitary)?;
        Ok(StepOutcome { jumped: false, record: Some(r), rho: next })
    }
}

/// One detection interval: draws jump/no-jump, the record on no-jump, and
/// applies the Kraus update followed by the drive.
pub fn sample_step<R: Rng + ?Sized>(
    rho: &DensityMatrix3,
    p: &SystemParams,
    axis: DriveAxis,
    rng: &mut R,
) -> Result<StepOutcome> {
    KrausStepper::new(p, axis).step(rho, rng)
}

/// Iterates [`sample_step`] over `[0, t_end]`. After a jump the state stays
/// `|g⟩⟨g|` and no further randomness is consumed.
pub fn simulate_trajectory<R: Rng + ?Sized>(
    rho0: &DensityMatrix3,
    p: &SystemParams,
    t_end: f64,
    axis: DriveAxis,
    rng: &mut R,
) -> Result<TrajectoryRecord<DensityMatrix3>> {
    let grid = TimeGrid::new(t_end, p.dt())?;
    let stepper = KrausStepper::new(p, axis);
    let mut states = Vec::with_capacity(grid.len());
    let mut records = Vec::with_capacity(grid.steps);
    let mut jump_index = None;
    let mut rho = *rho0;
    states.push(rho);
    for k in 0..grid.steps {
        if jump_index.is_some() {
            states.push(DensityMatrix3::ground());
            records.push(None);
            continue;
        }
        let out = stepper.step(&rho, rng)?;
        if out.jumped {
            jump_index = Some(k + 1);
            rho = DensityMatrix3::ground();
        } else {
            rho = out.rho;
        }
        states.push(rho);
        records.push(out.record);
    }
    Ok(TrajectoryRecord::new(grid, states, records, jump_index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{c, G};
    use crate::state::density_from_amplitudes;
    use crate::trajectory::rng::trajectory_rng;

    fn reference_rates() -> SystemParams {
        SystemParams::new(0.2, 1.0, 3.0, 0.0, 0.01).unwrap()
    }

    #[test]
    fn ground_state_never_jumps() {
        let mut rng = trajectory_rng(1, 0);
        let g = DensityMatrix3::ground();
        for _ in 0..100 {
            let out = sample_step(&g, &reference_rates(), DriveAxis::X, &mut rng).unwrap();
            assert!(!out.jumped);
            assert!((out.rho.matrix() - g.matrix()).norm() < 1e-14);
        }
    }

    #[test]
    fn excited_jump_probability() {
        let s = KrausStepper::new(&reference_rates(), DriveAxis::X);
        assert!((s.jump_probability(&DensityMatrix3::basis(E)) - 0.01).abs() < 1e-15);
        let mut rng = trajectory_rng(2, 0);
        let n = 200_000;
        let jumps = (0..n).filter(|_| s.step(&DensityMatrix3::basis(E), &mut rng).unwrap().jumped).count();
        let freq = jumps as f64 / n as f64;
        assert!((freq - 0.01).abs() < 4.0 * (0.01 * 0.99 / n as f64).sqrt());
    }

    #[test]
    fn superposition_record_mean() {
        let h = c(std::f64::consts::FRAC_1_SQRT_2);
        let rho = density_from_amplitudes(c(0.0), h, h).unwrap();
        let s = KrausStepper::new(&reference_rates(), DriveAxis::X);
        assert!((s.record_mean(&rho) - 0.2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn trivial_parameters_freeze_the_state() {
        let p = SystemParams::new(0.0, 0.0, 0.0, 0.0, 0.01).unwrap();
        let mut rng = trajectory_rng(3, 0);
        let traj = simulate_trajectory(&DensityMatrix3::excited_f(), &p, 1.0, DriveAxis::Y, &mut rng).unwrap();
        assert!(traj.survived());
        for rho in &traj.states {
            assert!((rho.matrix() - DensityMatrix3::excited_f().matrix()).norm() < 1e-14);
        }
        let mean = traj.records.iter().map(|r| r.unwrap()).sum::<f64>() / traj.records.len() as f64;
        assert!(mean.abs() < 4.0 / (0.01f64.sqrt() * 10.0));
    }

    #[test]
    fn trajectory_is_pure_and_collapses_after_jump() {
        let mut collapsed = 0;
        for i in 0..20 {
            let mut rng = trajectory_rng(4, i);
            let traj =
                simulate_trajectory(&DensityMatrix3::excited_f(), &reference_rates(), 5.0, DriveAxis::X, &mut rng)
                    .unwrap();
            for rho in &traj.states {
                assert!((rho.purity() - 1.0).abs() < 1e-8);
                assert!((rho.trace() - 1.0).abs() < 1e-12);
            }
            if let Some(j) = traj.jump_index {
                collapsed += 1;
                assert!(!traj.survived());
                for rho in &traj.states[j..] {
                    assert!((rho.populations()[G] - 1.0).abs() < 1e-14);
                }
                assert!(traj.records[j - 1..].iter().all(Option::is_none));
            }
        }
        assert!(collapsed > 10);
    }

    #[test]
    fn replay_is_bit_identical() {
        let run = || {
            let mut rng = trajectory_rng(9, 17);
            simulate_trajectory(&DensityMatrix3::excited_f(), &reference_rates(), 2.0, DriveAxis::Y, &mut rng).unwrap()
        };
        assert_eq!(run(), run());
    }
}
