use thiserror::Error;

/// Errors raised by the evaluators, allocators, oracles and solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("allocation has {got} entries but the instance has {expected} subchannels")]
    LengthMismatch { expected: usize, got: usize },

    #[error("power component `{component}` of entry {index} is negative or not finite ({value})")]
    NegativePower {
        index: usize,
        component: &'static str,
        value: f64,
    },

    #[error("confidential power b = {value} on entry {index}, which is outside the secure set")]
    SecretPowerOutsideSecureSet { index: usize, value: f64 },

    #[error("both power budgets are zero")]
    ZeroBudgets,

    #[error("multiplier search for {target} did not converge after {iterations} iterations (best relative residual {residual:e})")]
    NonConvergence {
        target: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("intersection discriminant {value:e} is negative beyond rounding noise")]
    BranchLogic { value: f64 },

    #[error("grid oracle supports at most 3 subchannels, got {0}")]
    TooManySubchannels(usize),

    #[error("empty fading state list")]
    NoStates,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_finite_nonneg(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite and >= 0, got {value}"),
        })
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite and > 0, got {value}"),
        })
    }
}
