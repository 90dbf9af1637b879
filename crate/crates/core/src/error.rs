use thiserror::Error;

/// Errors raised by the simulator and the calculators built on it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unstable configuration: k * load = {product} must be < 1")]
    Unstable { product: f64 },

    #[error("cannot parse distribution spec `{spec}`: {reason}")]
    ParseSpec { spec: String, reason: String },

    #[error("quantile level {q} lies inside the truncated residual mass {residual:e}")]
    Unresolvable { q: f64, residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
