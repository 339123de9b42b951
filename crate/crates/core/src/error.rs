use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DasError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("undefined geometry: {0}")]
    Geometry(String),

    #[error("threshold unreachable at this steering (D({steer_rad}) = {directivity} < {threshold})")]
    ThresholdUnreachable {
        steer_rad: f64,
        directivity: f64,
        threshold: f64,
    },

    #[error("infinite f-number (zero aperture)")]
    InfiniteFNumber,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("expected {expected} data, got {actual}")]
    SignalKind {
        expected: &'static str,
        actual: &'static str,
    },

    #[error("insufficient aperture for Qp")]
    InsufficientAperture,

    #[error("unusable region: {0}")]
    UnusableRegion(String),

    #[error("unresolvable profile: {0}")]
    Unresolvable(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("matrix cache error: {0}")]
    Cache(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for DasError {
    fn from(e: std::io::Error) -> Self {
        DasError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, DasError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> DasError {
    DasError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
