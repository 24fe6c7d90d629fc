use thiserror::Error;

/// Errors produced by the simulation engines and workflows.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("pole in linearized gain at omega = {omega:e} rad/s (operating point at instability threshold)")]
    Pole { omega: f64 },

    #[error("operating point is unstable (N = {photon_number:e})")]
    UnstableOperatingPoint { photon_number: f64 },

    #[error("Kerr coefficient is zero: the resonator has no bifurcation")]
    NoBifurcation,

    #[error("continuation corrector failed at step floor; last good point delta = {last_delta:e}, N = {last_n:e}")]
    Continuation { last_delta: f64, last_n: f64 },

    #[error("{0} did not converge")]
    NoConvergence(&'static str),

    #[error("integrator exceeded max_steps = {0}")]
    MaxSteps(u64),

    #[error("Newton iteration failed at t = {t:e} s after step halvings")]
    NewtonFailure { t: f64 },

    #[error("projection window of {periods} periods is not commensurate with omega = {omega:e}")]
    NonCommensurateWindow { omega: f64, periods: f64 },

    #[error("incident component vanishes at omega = {omega:e}; reflection ratio undefined")]
    UndefinedRatio { omega: f64 },

    #[error("resonance fit failed: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
