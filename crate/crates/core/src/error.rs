use alloc::string::String;

/// Errors raised by the analytical, simulation and optimization routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "C({n}, {k}) = {count} cache combinations exceeds the enumeration cap of {cap}; \
         every per-combination vector would need {count} entries"
    )]
    TooManyCombinations { n: usize, k: usize, count: u128, cap: u128 },

    #[error("{what} index {index} out of range (length {len})")]
    IndexOutOfRange { what: &'static str, index: usize, len: usize },

    #[error(
        "quadrature for {integral} did not converge: estimated error {error:e} \
         exceeds tolerance {tolerance:e} after {subdivisions} subdivisions"
    )]
    Quadrature { integral: &'static str, error: f64, tolerance: f64, subdivisions: usize },

    #[error("MRFS tie sum not within tail tolerance after {terms} terms")]
    Truncation { terms: usize },

    #[error("undefined quantity: {0}")]
    Undefined(&'static str),

    #[error("non-finite {what} at iteration {iteration}")]
    NonFinite { what: &'static str, iteration: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
