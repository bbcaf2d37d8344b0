use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of a function.
    #[error("domain error in {function}: {detail}")]
    Domain {
        function: &'static str,
        detail: String,
    },

    /// A configuration parameter violates its invariant.
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// A covariance matrix violates the uncertainty principle.
    #[error("unphysical covariance ({parameter}): {detail}")]
    Unphysical {
        parameter: &'static str,
        detail: String,
    },

    /// Round-off pushed the symplectic discriminant below zero by more than the tolerance.
    #[error("negative symplectic discriminant {discriminant:e}")]
    NumericalPhysicality { discriminant: f64 },

    #[error("degenerate channel: transmittance {name} is zero")]
    DegenerateChannel { name: &'static str },

    #[error("degenerate displacement gain: Bob's modulation variance is zero")]
    DegenerateGain,

    #[error("need at least {required} samples, got {got}")]
    InsufficientSamples { required: u64, got: u64 },

    /// Every candidate in the confidence region is unphysical; the protocol aborts.
    #[error("parameter estimation failed: {0}")]
    EstimationFailure(String),

    /// A search assumed monotonic behaviour that the samples contradict.
    #[error("non-monotone {quantity} at {at}: {detail}")]
    NonMonotone {
        quantity: &'static str,
        at: f64,
        detail: String,
    },
}

pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> Error {
    Error::InvalidParameter {
        name,
        value,
        reason,
    }
}
