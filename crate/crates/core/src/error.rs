use thiserror::Error;

/// Growth regimes in which the minimizer framework gives no usable exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// q < N/2: the solution can grow arbitrarily fast at the free boundary.
    RapidGrowth,
    /// q = N/2: the growth estimate is inconclusive.
    Inconclusive,
    /// Outside the range where the Hölder exponent formula applies.
    OutsideHolderRange,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::RapidGrowth => write!(
                f,
                "q < N/2: u grows rapidly at the free boundary, Hölder continuity does not arise"
            ),
            Regime::Inconclusive => write!(f, "q = N/2: the growth of u is inconclusive"),
            Regime::OutsideHolderRange => {
                write!(f, "Hölder exponent is only predicted for N/2 < q <= N or q = inf")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error in `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("regime error (q = {q}, N = {dim}): {regime}")]
    Regime { regime: Regime, q: f64, dim: usize },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("inadmissible boundary data: {0}")]
    Admissibility(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("solver did not converge after {iterations} sweeps (kkt residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config_err(field: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        reason: reason.into(),
    }
}
