use thiserror::Error;

/// Errors raised by the steering toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Numerical options are inconsistent with the problem (step size, window, horizon).
    #[error("configuration error: {0}")]
    Config(String),

    /// The non-resonance condition m² + l² ≠ 2k² fails.
    #[error("resonance: {m}² + {l}² = 2·{k}²")]
    Resonance { k: usize, m: usize, l: usize },

    /// A sine in the C′ supremum vanishes for a retained pair.
    #[error("resonant pair ({l},{m}) makes C′ singular")]
    SingularPair { l: usize, m: usize },

    /// The moment horizon violates the Ingham condition.
    #[error("horizon {horizon} does not exceed 2π/gap = {required}")]
    Horizon { horizon: f64, required: f64 },

    /// Gram matrix too ill-conditioned to invert reliably.
    #[error("Gram matrix condition number {0:.3e} exceeds 1e12")]
    IllConditioned(f64),

    /// Norm drift exceeded the unitarity tolerance; the run is failed.
    #[error("unitarity drift {drift:.3e} exceeds tolerance {tol:.1e} at t = {time}")]
    Drift {
        drift: f64,
        tol: f64,
        time: f64,
        partial: Box<crate::propagator::Trajectory>,
    },

    /// The quasi-Newton corrector stopped contracting.
    #[error("corrector diverged; residual history {0:?}")]
    Contraction(Vec<f64>),

    /// The corrector hit its iteration cap without reaching tolerance.
    #[error("corrector did not reach tolerance in {iters} iterations (residual {residual:.3e})")]
    NotConverged { iters: usize, residual: f64 },

    /// Practical steering never entered the exact-controllability ball.
    #[error("n-budget exhausted; achieved (n, H3 error) curve {0:?}")]
    Budget(Vec<(u64, f64)>),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
