use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("deflection field has {len} samples, the stencil needs at least 5")]
    FieldTooShort { len: usize },

    #[error("assembled mass matrix is numerically singular (pivot {pivot:e})")]
    SingularMassMatrix { pivot: f64 },

    #[error("saturation smoothing factor must be positive, got {phi}")]
    NonPositivePhi { phi: f64 },

    #[error("velocity error e2 = {e2} is inconsistent with tip rate {w_dot_tip} (expected e2 = -w_dot_tip)")]
    InconsistentVelocityError { e2: f64, w_dot_tip: f64 },

    #[error("non-finite observation `{field}` = {value}")]
    ObservationNotFinite { field: &'static str, value: f64 },

    #[error("riccati iteration failed: {reason}")]
    NotStabilizable { reason: String },

    #[error("t = {t} s lies beyond the last reference window (ends at {end} s)")]
    TimeOutOfRange { t: f64, end: f64 },

    #[error("numerical blow-up at t = {t:.4} s: |{field}| = {value:e} exceeds 1e6")]
    NumericalBlowup { t: f64, field: &'static str, value: f64 },

    #[error("trace is empty")]
    EmptyTrace,

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
