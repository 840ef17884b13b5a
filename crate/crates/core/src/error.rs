use thiserror::Error;

/// Errors produced across the toolkit.
///
/// Variants split into user/validation errors (bad inputs, malformed files,
/// parameter-domain violations) and numerical failures (divergence, blow-up,
/// unresolved spectra). [`Error::is_user_error`] drives the CLI exit-code
/// contract.
#[derive(Debug, Error)]
pub enum Error {
    #[error("structural mismatch: {0}")]
    Structure(String),

    #[error("unsupported derivative order {0} (maximum 4)")]
    UnsupportedOrder(usize),

    #[error("parameter domain: {0}")]
    ParameterDomain(String),

    #[error("no convergence after {iterations} iterations (last residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("Jacobian numerically singular: {0}")]
    SingularJacobian(String),

    #[error("resolution: {0}")]
    Resolution(String),

    #[error("eigenvalue tracking ambiguous at xi = {xi:.6}: overlaps {first:.4} and {second:.4}")]
    TrackingAmbiguity { xi: f64, first: f64, second: f64 },

    #[error("poor fit: {0}")]
    PoorFit(String),

    #[error("domain: {0}")]
    Domain(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("modulation too large: {0}")]
    ModulationTooLarge(String),

    #[error("phase extraction inconsistent: {0}")]
    ExtractionInconsistency(String),

    #[error("support touches domain boundary: {0}")]
    Support(String),

    #[error("sampling: {0}")]
    Sampling(String),

    #[error("state blew up at t = {t:.6}")]
    BlowUp { t: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("schema version {found} not supported (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by invalid input rather than numerical failure.
    pub fn is_user_error(&self) -> bool {
        matches!(
            self,
            Error::Structure(_)
                | Error::UnsupportedOrder(_)
                | Error::ParameterDomain(_)
                | Error::Domain(_)
                | Error::Config(_)
                | Error::Support(_)
                | Error::Sampling(_)
                | Error::Parse(_)
                | Error::SchemaVersion { .. }
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
