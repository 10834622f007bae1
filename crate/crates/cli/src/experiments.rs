//! The experiment families. Each returns plain data; [`crate::run`] writes it.

use nhqubit::liouvillian::{
    build_liouvillian, evolve_normalized, evolve_three_level, find_ep, linspace, scan_spectrum,
};
use nhqubit::ode::TimeGrid;
use nhqubit::optimal::{find_fixed_points, phase_portrait, shoot, Contour, FixedPoint, FixedPointKind, PathSolution};
use nhqubit::trajectory::{
    collect_records, postselect, simulate_ensemble, simulate_sde, simulate_sde_ensemble, simulate_trajectory,
    trajectory_rng, EnsembleStats, JumpPolicy, PostSelect, SdeOptions, SdeScheme, TrajectoryRecord,
};
use nhqubit::{BlochVector, DensityMatrix3, DriveAxis, SystemParams};

use crate::config::{Pipeline, PostSelectMode, RunConfig};
use crate::error::CliError;

pub fn sde_scheme(p: Pipeline) -> Option<SdeScheme> {
    match p {
        Pipeline::Jump => None,
        Pipeline::Kraus => Some(SdeScheme::Kraus),
        Pipeline::Stratonovich => Some(SdeScheme::Stratonovich),
        Pipeline::Ito => Some(SdeScheme::Ito),
    }
}

fn sde_options(cfg: &RunConfig) -> SdeOptions {
    SdeOptions { norm_tolerance: cfg.norm_tol }
}

fn q0(cfg: &RunConfig) -> BlochVector {
    BlochVector::from_array(cfg.qi)
}

fn rho0(cfg: &RunConfig) -> Result<DensityMatrix3, CliError> {
    Ok(DensityMatrix3::from_bloch(q0(cfg))?)
}

/// Ensemble statistics for one axis under the configured pipeline and
/// post-selection.
pub fn ensemble_stats(cfg: &RunConfig, axis: DriveAxis) -> Result<EnsembleStats, CliError> {
    let p = cfg.params()?;
    let final_mode = PostSelect::FinalState { target: BlochVector::from_array(cfg.qf), lambda: cfg.lambda };
    match (sde_scheme(cfg.scheme), cfg.postselect) {
        (None, PostSelectMode::Final) => {
            let rho0 = rho0(cfg)?;
            let recs = collect_records(cfg.n, cfg.seed, |_, rng| simulate_trajectory(&rho0, &p, cfg.t_end, axis, rng))?;
            Ok(EnsembleStats::from_records(postselect(&recs, &final_mode)?)?)
        }
        (None, _) => Ok(simulate_ensemble(cfg.n, &rho0(cfg)?, &p, cfg.t_end, axis, cfg.seed)?),
        (Some(scheme), mode) => {
            let policy = if mode == PostSelectMode::None { JumpPolicy::Ignore } else { JumpPolicy::Sample };
            let opts = sde_options(cfg);
            if mode == PostSelectMode::Final {
                let recs = collect_records(cfg.n, cfg.seed, |_, rng| {
                    simulate_sde(q0(cfg), &p, cfg.t_end, axis, scheme, policy, &opts, rng)
                })?;
                Ok(EnsembleStats::from_records(postselect(&recs, &final_mode)?)?)
            } else {
                Ok(simulate_sde_ensemble(cfg.n, q0(cfg), &p, cfg.t_end, axis, scheme, policy, &opts, cfg.seed)?)
            }
        }
    }
}

/// Trajectory `index` of the ensemble, regenerated from its own stream.
pub fn single_trajectory(
    cfg: &RunConfig,
    axis: DriveAxis,
    index: u64,
) -> Result<TrajectoryRecord<Option<BlochVector>>, CliError> {
    let p = cfg.params()?;
    let mut rng = trajectory_rng(cfg.seed, index);
    let rec = match sde_scheme(cfg.scheme) {
        None => {
            let r = simulate_trajectory(&rho0(cfg)?, &p, cfg.t_end, axis, &mut rng)?;
            let states = r.states.iter().map(|s| s.bloch().ok()).collect();
            TrajectoryRecord::new(r.grid, states, r.records, r.jump_index)
        }
        Some(scheme) => {
            let policy = if cfg.postselect == PostSelectMode::None { JumpPolicy::Ignore } else { JumpPolicy::Sample };
            let r = simulate_sde(q0(cfg), &p, cfg.t_end, axis, scheme, policy, &sde_options(cfg), &mut rng)?;
            let mut states: Vec<_> = r.states.iter().copied().map(Some).collect();
            states.resize(r.grid.len(), None);
            TrajectoryRecord::new(r.grid, states, r.records, r.jump_index)
        }
    };
    Ok(rec)
}

/// Unconditioned three-level Lindblad populations.
pub fn lindblad_reference(cfg: &RunConfig, axis: DriveAxis) -> Result<Vec<[f64; 3]>, CliError> {
    let p = cfg.params()?;
    let grid = TimeGrid::new(cfg.t_end, cfg.dt)?;
    Ok(evolve_three_level(&p, axis, &rho0(cfg)?, &grid)?.iter().map(|r| r.populations()).collect())
}

/// Normalized Liouvillian Bloch trajectory on the run grid.
pub fn liouvillian_reference(cfg: &RunConfig, axis: DriveAxis) -> Result<Vec<BlochVector>, CliError> {
    let p = cfg.params()?;
    let grid = TimeGrid::new(cfg.t_end, cfg.dt)?;
    let l = build_liouvillian(&p, axis);
    evolve_normalized(&l, &q0(cfg).to_qubit(), &grid)?
        .iter()
        .map(|m| BlochVector::from_qubit(m).map_err(CliError::from))
        .collect()
}

pub struct Comparison {
    pub axis: DriveAxis,
    pub liouvillian: Vec<BlochVector>,
    pub stats: EnsembleStats,
}

impl Comparison {
    /// `max_t |P_f^ens − P_f^L|` over survivor-conditioned normalized `P_f`.
    pub fn sup_pf_deviation(&self) -> f64 {
        self.stats
            .pf_norm
            .iter()
            .zip(&self.liouvillian)
            .map(|(s, q)| (s.mean - 0.5 * (1.0 + q.z)).abs())
            .fold(0.0, f64::max)
    }

    /// Trapezoid integral of `|⟨q⟩_ens − q_L|` over time.
    pub fn integrated_deviation(&self) -> f64 {
        let d: Vec<f64> =
            (0..self.liouvillian.len()).map(|k| self.stats.mean_bloch(k).distance(&self.liouvillian[k])).collect();
        let t = &self.stats.times;
        (1..d.len()).map(|k| 0.5 * (t[k] - t[k - 1]) * (d[k] + d[k - 1])).sum()
    }
}

/// Liouvillian against survivor-conditioned trajectories.
pub fn compare(cfg: &RunConfig, axis: DriveAxis) -> Result<Comparison, CliError> {
    let mut c = cfg.clone();
    if c.postselect == PostSelectMode::None {
        c.postselect = PostSelectMode::NoJump;
    }
    // Bloch pipelines compare the pure no-jump dynamics.
    if sde_scheme(c.scheme).is_some() {
        c.postselect = PostSelectMode::None;
    }
    Ok(Comparison { axis, liouvillian: liouvillian_reference(cfg, axis)?, stats: ensemble_stats(&c, axis)? })
}

pub struct SpectrumScan {
    pub axis: DriveAxis,
    pub points: Vec<nhqubit::liouvillian::SpectrumPoint>,
    pub ep: Option<nhqubit::liouvillian::ExceptionalPoint>,
}

pub fn spectrum(cfg: &RunConfig, axis: DriveAxis) -> Result<SpectrumScan, CliError> {
    let omegas = linspace(cfg.omega_min, cfg.omega_max, cfg.points);
    let points = scan_spectrum(cfg.gamma_e, cfg.gamma_g, axis, &omegas)?;
    let ep = match find_ep(cfg.gamma_e, cfg.gamma_g, (cfg.omega_min.max(1e-9), cfg.omega_max), axis) {
        Ok(ep) => Some(ep),
        Err(nhqubit::Error::EpNotFound { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(SpectrumScan { axis, points, ep })
}

pub struct PathComparison {
    pub path: PathSolution,
    /// Post-selected Bloch statistics on the trajectory grid, if requested.
    pub ensemble: Option<EnsembleStats>,
}

impl PathComparison {
    /// RMS of `|q_path(t) − ⟨q⟩(t)|` over the trajectory grid.
    pub fn rms_distance(&self) -> Option<f64> {
        let s = self.ensemble.as_ref()?;
        let n = s.times.len();
        let ss: f64 = (0..n).map(|k| self.path.q_at(s.times[k]).distance(&s.mean_bloch(k)).powi(2)).sum();
        Some((ss / n as f64).sqrt())
    }
}

pub fn optimal_path(cfg: &RunConfig, axis: DriveAxis) -> Result<PathComparison, CliError> {
    let p: SystemParams = cfg.params()?;
    let path = shoot(&q0(cfg), &BlochVector::from_array(cfg.qf), cfg.t_end, &p, axis, cfg.starts)?;
    let ensemble = match cfg.postselect {
        PostSelectMode::Final => {
            let mut c = cfg.clone();
            c.scheme = Pipeline::Jump;
            Some(ensemble_stats(&c, axis)?)
        }
        _ => None,
    };
    Ok(PathComparison { path, ensemble })
}

pub struct Portrait {
    pub fixed_points: Vec<FixedPoint>,
    pub contours: Vec<Contour>,
}

/// Reduced phase portrait over `θ_b ∈ [0, 2π]`; saddle energies are added
/// to the requested contour levels.
pub fn portrait(cfg: &RunConfig) -> Result<Portrait, CliError> {
    let p = cfg.params()?;
    let range = (0.0, std::f64::consts::TAU);
    let fixed_points = find_fixed_points(&p, range);
    let mut energies = cfg.energies.clone();
    for f in fixed_points.iter().filter(|f| f.kind == FixedPointKind::Saddle) {
        if energies.iter().all(|e| (e - f.energy).abs() > 1e-9 * f.energy.abs().max(1.0)) {
            energies.push(f.energy);
        }
    }
    let grid = linspace(range.0, range.1, cfg.theta_points);
    Ok(Portrait { contours: phase_portrait(&energies, &p, &grid), fixed_points })
}
