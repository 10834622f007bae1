use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("amplitudes are not normalized: total probability {0}")]
    NotNormalized(f64),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("impossible measurement outcome: post-measurement trace {0:e}")]
    ImpossibleOutcome(f64),

    #[error("f-e manifold depleted: population {0:e}")]
    ManifoldDepleted(f64),

    #[error(
        "Liouvillian is too close to an exceptional point for a spectral \
         decomposition (conditioning {conditioning:e}); use evolve_ode instead"
    )]
    EpDegenerate { conditioning: f64 },

    #[error("no exceptional point found for omega in [{lo}, {hi}] MHz")]
    EpNotFound { lo: f64, hi: f64 },

    #[error("step rejected at t = {t}: local error estimate {estimate:e} exceeds {tolerance:e}")]
    StepRejected { t: f64, estimate: f64, tolerance: f64 },

    #[error("Bloch vector norm {norm} exceeded 1 + {tolerance:e} at t = {t}; reduce dt")]
    BlochNormDrift { t: f64, norm: f64, tolerance: f64 },

    #[error("time span {span} is not a multiple of dt = {dt}")]
    GridMismatch { span: f64, dt: f64 },

    #[error("post-selection kept no trajectories")]
    EmptyEnsemble,

    #[error("shooting did not converge: best endpoint residual {residual:e} at p(0) = {best_p0:?}")]
    NoConvergence { residual: f64, best_p0: [f64; 3] },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
