use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Payloads are stored as `f64` regardless of the scalar type so the error
/// stays `Copy`-free of generics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("modular parameter must have positive imaginary part (got Im tau = {im_tau})")]
    NonPositiveImTau { im_tau: f64 },

    #[error("series failed to converge within {max_terms} terms")]
    SeriesNotConverged { max_terms: usize },

    #[error("evaluation point lies within {distance:e} of a pole or zero")]
    PoleProximity { distance: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time {t} is outside the admissible range [0, {limit})")]
    TimeOutOfRange { t: f64, limit: f64 },

    #[error("configuration is outside the restricted alcove: {reason}")]
    OutsideAlcove { reason: String },

    #[error("function is not an observable: {reason}")]
    ObservableViolation { reason: String },

    #[error("quadrature did not reach the requested accuracy (last relative change {change:e})")]
    QuadratureNotConverged { change: f64 },

    #[error("value expected to be real has imaginary part {imag:e} (scale {scale:e})")]
    NotReal { imag: f64, scale: f64 },

    #[error("matrix is numerically singular")]
    Singular,

    #[error("non-finite intermediate value in {context}")]
    NonFinite { context: &'static str },

    #[error("points closer than the separation threshold (gap {gap:e})")]
    SeparationTooSmall { gap: f64 },

    #[error("contour of radius {radius:e} cannot isolate the pole")]
    ContourTooLarge { radius: f64 },

    #[error("problem exceeds the complexity cap: {reason}")]
    ComplexityCap { reason: String },

    #[error("unsupported size: {reason}")]
    Unsupported { reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
