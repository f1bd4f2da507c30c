use thiserror::Error;

/// Failures surfaced by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain too small: exp(-sqrt(omega)*L) = {decay:.3e} exceeds {tol:.0e}")]
    DomainTooSmall { decay: f64, tol: f64 },

    #[error("no ground state: omega = {omega} must exceed gamma^2/4 = {threshold}")]
    NoGroundState { omega: f64, threshold: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("not on threshold manifold: mass defect {mass_defect:.3e}, energy defect {energy_defect:.3e}")]
    NotOnThresholdManifold { mass_defect: f64, energy_defect: f64 },

    #[error("cutoff exceeds domain: 2R = {two_r} >= L = {l}")]
    CutoffExceedsDomain { two_r: f64, l: f64 },

    #[error("Newton failed: {0}")]
    NewtonFailed(String),

    #[error("spectrum failed: {0}")]
    SpectrumFailed(String),

    #[error("degenerate projection: projected norm {projected:.3e} vs input norm {input:.3e}")]
    DegenerateProjection { projected: f64, input: f64 },

    #[error("resolvent near-singular: shift {shift} lies within 1e-3 of eigenvalue {eigenvalue}")]
    ResolventNearSingular { shift: f64, eigenvalue: f64 },

    #[error("t0 too small: ||V(t0)||_H1 = {series:.3e} exceeds 0.1*||Q||_H1 = {bound:.3e}")]
    T0TooSmall { series: f64, bound: f64 },

    #[error("truncation breached at t = {t}: edge mass {edge_mass:.3e}")]
    TruncationBreached { t: f64, edge_mass: f64 },

    #[error("linear solve failed: {0}")]
    SolveFailed(String),

    #[error("insufficient points: need at least {needed}, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
