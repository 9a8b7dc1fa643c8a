use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("quadrature did not converge at {context} (estimated error {error:e})")]
    QuadratureNonConvergence { context: String, error: f64 },

    #[error("subordinator path ends at {path_end} which does not exceed query time {t}")]
    PathTooShort { t: f64, path_end: f64 },

    #[error("inverse Laplace transform unstable at {} cell(s); first at t={t}, tau={tau}", cells)]
    InversionUnstable { cells: usize, t: f64, tau: f64 },

    #[error("inverse density table has a negative entry {value:e} at t={t}, tau={tau}")]
    NegativeDensity { t: f64, tau: f64, value: f64 },

    #[error("operator condition violated at node {node} (x={x}): {condition}")]
    ConditionViolated { node: usize, x: f64, condition: String },

    #[error("boundary specification rejected: {0}")]
    BoundarySpec(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular constrained system at step {step}")]
    SingularSystem { step: usize },

    #[error("spectral decomposition rejected: {0}")]
    Spectral(String),

    #[error("insufficient tau coverage: tail mass {tail_mass:e} at t={t}")]
    TauCoverage { t: f64, tail_mass: f64 },

    #[error("jump probability {prob} per step exceeds 0.1 at x={x}")]
    JumpProbability { x: f64, prob: f64 },

    #[error("time {0} was not observed")]
    TimeNotObserved(f64),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
