//! Ensemble averages with a reduction order fixed by trajectory index.
//!
//! Trajectories are grouped into chunks of [`CHUNK`] consecutive indices.
//! Each chunk is accumulated sequentially and the chunk sums are merged
//! pairwise in index order, so the floating-point result does not depend on
//! how rayon schedules the work.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::ode::TimeGrid;
use crate::params::{DriveAxis, SystemParams};
use crate::state::{BlochVector, DensityMatrix3};

use super::kraus_step::simulate_trajectory;
use super::record::{EnsembleSample, TrajectoryRecord};
use super::rng::{trajectory_rng, TrajectoryRng};
use super::sde::{simulate_sde, JumpPolicy, SdeOptions, SdeScheme};

pub const CHUNK: usize = 64;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.sum += v;
        self.sum_sq += v * v;
    }

    fn merge(&mut self, o: &Moments) {
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
    }

    fn stat(&self, n: usize) -> Stat {
        if n == 0 {
            return Stat { mean: f64::NAN, se: f64::NAN };
        }
        let nf = n as f64;
        let mean = self.sum / nf;
        let se = if n > 1 {
            let var = ((self.sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
            (var / nf).sqrt()
        } else {
            0.0
        };
        Stat { mean, se }
    }
}

/// Per-time sums: populations over all trajectories, then `P_f^norm, x, y, z`
/// over trajectories that have not jumped yet.
#[derive(Debug, Clone)]
struct Accumulator {
    n: usize,
    all: Vec<[Moments; 3]>,
    survivors: Vec<usize>,
    cond: Vec<[Moments; 4]>,
}

impl Accumulator {
    fn new(len: usize) -> Self {
        Self {
            n: 0,
            all: vec![[Moments::default(); 3]; len],
            survivors: vec![0; len],
            cond: vec![[Moments::default(); 4]; len],
        }
    }

    fn push<S: EnsembleSample>(&mut self, rec: &TrajectoryRecord<S>) {
        self.n += 1;
        for k in 0..self.all.len() {
            let state = rec.states.get(k);
            let pops = state.map_or([0.0, 0.0, 1.0], |s| s.populations());
            for (m, v) in self.all[k].iter_mut().zip(pops) {
                m.push(v);
            }
            if !rec.survived_at(k) {
                continue;
            }
            if let Some(q) = state.and_then(|s| s.manifold_bloch()) {
                self.survivors[k] += 1;
                let c = &mut self.cond[k];
                c[0].push((1.0 + q.z) / 2.0);
                c[1].push(q.x);
                c[2].push(q.y);
                c[3].push(q.z);
            }
        }
    }

    fn merge(mut self, o: &Accumulator) -> Self {
        self.n += o.n;
        for k in 0..self.all.len() {
            for i in 0..3 {
                self.all[k][i].merge(&o.all[k][i]);
            }
            for i in 0..4 {
                self.cond[k][i].merge(&o.cond[k][i]);
            }
            self.survivors[k] += o.survivors[k];
        }
        self
    }

    fn finish(self, grid: TimeGrid) -> EnsembleStats {
        let len = self.all.len();
        let mut s = EnsembleStats {
            times: grid.times(),
            pf: Vec::with_capacity(len),
            pe: Vec::with_capacity(len),
            pg: Vec::with_capacity(len),
            pf_norm: Vec::with_capacity(len),
            bloch: Vec::with_capacity(len),
            n_total: self.n,
            n_survived: self.survivors.clone(),
        };
        for k in 0..len {
            let [f, e, g] = self.all[k];
            s.pf.push(f.stat(self.n));
            s.pe.push(e.stat(self.n));
            s.pg.push(g.stat(self.n));
            let m = self.survivors[k];
            let c = &self.cond[k];
            s.pf_norm.push(c[0].stat(m));
            s.bloch.push([c[1].stat(m), c[2].stat(m), c[3].stat(m)]);
        }
        s
    }
}

fn tree_merge(mut parts: Vec<Accumulator>) -> Option<Accumulator> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => a.merge(&b),
                None => a,
            });
        }
        parts = next;
    }
    parts.pop()
}

/// Ensemble statistics on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    /// Unconditioned populations; jumped trajectories count as `|g⟩`.
    pub pf: Vec<Stat>,
    pub pe: Vec<Stat>,
    pub pg: Vec<Stat>,
    /// `ρ_ff/(ρ_ff+ρ_ee)` averaged over trajectories without a jump up to `t`.
    pub pf_norm: Vec<Stat>,
    /// Survivor-conditioned Bloch components `(x, y, z)`.
    pub bloch: Vec<[Stat; 3]>,
    pub n_total: usize,
    /// Trajectories without a jump up to each time.
    pub n_survived: Vec<usize>,
}

impl EnsembleStats {
    /// Statistics over an explicit set of records sharing one grid.
    pub fn from_records<'a, S, I>(records: I) -> Result<Self>
    where
        S: EnsembleSample + 'a,
        I: IntoIterator<Item = &'a TrajectoryRecord<S>>,
    {
        let mut it = records.into_iter().peekable();
        let grid = it.peek().ok_or(Error::EmptyEnsemble)?.grid;
        let mut acc = Accumulator::new(grid.len());
        for rec in it {
            if rec.grid != grid {
                return Err(Error::GridMismatch { span: rec.grid.t_end(), dt: rec.grid.dt });
            }
            acc.push(rec);
        }
        Ok(acc.finish(grid))
    }

    /// Survivor fraction `n_survived(t) / n_total`.
    pub fn survival_fraction(&self) -> Vec<f64> {
        self.n_survived.iter().map(|&m| m as f64 / self.n_total as f64).collect()
    }

    pub fn mean_bloch(&self, k: usize) -> BlochVector {
        let [x, y, z] = self.bloch[k];
        BlochVector::new(x.mean, y.mean, z.mean)
    }
}

/// Runs `n` trajectories produced by `simulate(index, rng)` and reduces them
/// deterministically.
pub fn run_ensemble<S, F>(n: usize, seed: u64, grid: TimeGrid, simulate: F) -> Result<EnsembleStats>
where
    S: EnsembleSample,
    F: Fn(u64, &mut TrajectoryRng) -> Result<TrajectoryRecord<S>> + Sync,
{
    if n == 0 {
        return Err(invalid("n", "ensemble needs at least one trajectory"));
    }
    let chunks: Vec<Accumulator> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = Accumulator::new(grid.len());
            for i in (c * CHUNK)..((c + 1) * CHUNK).min(n) {
                let mut rng = trajectory_rng(seed, i as u64);
                acc.push(&simulate(i as u64, &mut rng)?);
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    Ok(tree_merge(chunks).expect("n > 0").finish(grid))
}

/// Runs `n` trajectories and keeps every record, in index order.
pub fn collect_records<S, F>(n: usize, seed: u64, simulate: F) -> Result<Vec<TrajectoryRecord<S>>>
where
    S: Send,
    F: Fn(u64, &mut TrajectoryRng) -> Result<TrajectoryRecord<S>> + Sync,
{
    (0..n as u64).into_par_iter().map(|i| simulate(i, &mut trajectory_rng(seed, i))).collect()
}

/// Jump-aware Kraus ensemble.
pub fn simulate_ensemble(
    n: usize,
    rho0: &DensityMatrix3,
    p: &SystemParams,
    t_end: f64,
    axis: DriveAxis,
    seed: u64,
) -> Result<EnsembleStats> {
    let grid = TimeGrid::new(t_end, p.dt())?;
    run_ensemble(n, seed, grid, |_, rng| simulate_trajectory(rho0, p, t_end, axis, rng))
}

/// Bloch-pipeline ensemble for one integrator.
#[allow(clippy::too_many_arguments)]
pub fn simulate_sde_ensemble(
    n: usize,
    q0: BlochVector,
    p: &SystemParams,
    t_end: f64,
    axis: DriveAxis,
    scheme: SdeScheme,
    policy: JumpPolicy,
    opts: &SdeOptions,
    seed: u64,
) -> Result<EnsembleStats> {
    let grid = TimeGrid::new(t_end, p.dt())?;
    run_ensemble(n, seed, grid, |_, rng| simulate_sde(q0, p, t_end, axis, scheme, policy, opts, rng))
}

/// Trajectory filter applied before averaging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PostSelect {
    /// Keep trajectories without any `|e⟩ → |g⟩` jump.
    NoJump,
    /// Keep survivors whose final Bloch vector lies within `lambda` of `target`.
    FinalState { target: BlochVector, lambda: f64 },
}

pub fn postselect<'a, S: EnsembleSample>(
    records: &'a [TrajectoryRecord<S>],
    mode: &PostSelect,
) -> Result<Vec<&'a TrajectoryRecord<S>>> {
    let kept: Vec<_> = match *mode {
        PostSelect::NoJump => records.iter().filter(|r| r.survived()).collect(),
        PostSelect::FinalState { target, lambda } => {
            if !(lambda > 0.0 && lambda < 1.0) {
                return Err(invalid("lambda", format!("must lie in (0, 1), got {lambda}")));
            }
            records
                .iter()
                .filter(|r| {
                    r.final_state().and_then(|s| s.manifold_bloch()).is_some_and(|q| q.distance(&target) < lambda)
                })
                .collect()
        }
    };
    if kept.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    Ok(kept)
}
