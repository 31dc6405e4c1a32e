use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: &'static str },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A displaced number state loses more weight outside the truncation than
    /// the configured bound allows.
    #[error("truncation insufficient for displaced state |{m}> (displacement {alpha}): norm deficit {deficit:.3e} at dimension {dim}")]
    TruncationInsufficient { m: usize, alpha: f64, dim: usize, deficit: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("step size underflow at t = {t} (step {step:.3e}); problem is stiff or ill-posed")]
    Stiffness { t: f64, step: f64 },

    /// A physical invariant of a propagated state was violated.
    #[error("integrity check `{invariant}` failed at t = {t}: {detail}")]
    Integrity { invariant: &'static str, t: f64, detail: String },

    #[error("dark state undefined at t = {t}: both pulse amplitudes vanish")]
    UndefinedDarkState { t: f64 },

    #[error("correlation undefined at t = {t}: normalization {value:.3e} below floor")]
    UndefinedCorrelation { t: f64, value: f64 },

    #[error("no extremum: {0}")]
    NoExtremum(String),

    #[error("internal consistency error: {0}")]
    InternalConsistency(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
