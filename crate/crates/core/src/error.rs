use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("quadrature did not converge: estimate {estimate:e}, achieved error {achieved:e}, requested {requested:e}")]
    Quadrature {
        estimate: f64,
        achieved: f64,
        requested: f64,
    },

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    EigenNonConvergence { iterations: usize, residual: f64 },

    #[error("no bound state: lowest eigenvalue {lambda0} is not below -{gap_tol}")]
    NoBoundState { lambda0: f64, gap_tol: f64 },

    #[error("ground state vector changes sign (min/max = {ratio:e})")]
    SignChange { ratio: f64 },

    #[error("ground state is not localized on the grid: boundary/max ratio {ratio:e} exceeds {tol:e}")]
    BoundaryLeak { ratio: f64, tol: f64 },

    #[error("requested {requested} modes but only {available} are available")]
    ModeCount { requested: usize, available: usize },

    #[error("spectral truncation error {estimate:e} exceeds {tol:e}")]
    Truncation { estimate: f64, tol: f64 },

    #[error("kernel normalization defect {defect:e} exceeds {tol:e}")]
    NormalizationDefect { defect: f64, tol: f64 },

    #[error("point {x} lies outside the certified window [0, {radius}]")]
    OutsideWindow { x: f64, radius: f64 },

    #[error("certified window too small: {0}")]
    WindowTooSmall(String),

    #[error("operation not applicable: {0}")]
    NotApplicable(String),

    #[error("time step too large: drift displacement {displacement} exceeds {limit}")]
    TimeStepTooLarge { displacement: f64, limit: f64 },

    #[error("uncatalogued regime: {0}")]
    Uncatalogued(String),

    #[error("inconclusive classification: {0}")]
    Inconclusive(String),

    #[error("configuration error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error("artifact error: {0}")]
    Artifact(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field: field.to_string(),
        reason: reason.into(),
    }
}
