use thiserror::Error;

/// Failure modes of the numerical pipeline.
///
/// Quadrature and extrapolation routines return the best value they reached
/// together with the achieved error estimate, so callers can decide whether
/// a degraded result is still usable.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("quadrature did not converge: value {value:.6e}, error estimate {error:.3e} (target {target:.3e}, {panels} panels)")]
    NonConvergence {
        value: f64,
        error: f64,
        target: f64,
        panels: usize,
    },

    #[error("truncation tail dominates: tail estimate {tail:.3e} exceeds {limit:.3e}")]
    TailDominated { tail: f64, limit: f64 },

    #[error("mixed partial derivative unstable: corrections {previous:.3e} -> {last:.3e} do not contract at k = {k:.6e}")]
    DerivativeUnstable { k: f64, previous: f64, last: f64 },

    #[error("nascent-delta peak unresolved at k = {k:.6e}: {source}")]
    PeakUnresolved {
        k: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("alpha extrapolation not contracting: corrections {previous:.3e} -> {last:.3e}")]
    NonContracting { previous: f64, last: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
