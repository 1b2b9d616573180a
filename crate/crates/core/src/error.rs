use alloc::string::String;

/// Failures shared by every module of the core crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The policy-induced chain has no unique, attracting stationary
    /// distribution (uniform ergodicity fails).
    #[error("chain is not ergodic: {0}")]
    NonErgodic(String),

    /// `A_θ` is not negative definite (symmetric-part reading) or is singular.
    #[error("exploration assumption violated: {0}")]
    AssumptionOneViolated(String),

    #[error("mixing too slow: {0}")]
    MixingTooSlow(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! param_err {
    ($($arg:tt)*) => {
        $crate::error::Error::Parameter(alloc::format!($($arg)*))
    };
}
pub(crate) use param_err;
