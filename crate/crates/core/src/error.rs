use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong inside the library.
///
/// Variants split into two families: invalid input (bad parameters,
/// malformed descriptors) and numerical failures where an invariant that
/// should hold for physical input was violated. [`Error::is_numerical`]
/// tells them apart.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("series constant term {0} is negative; exp(-s f) needs f(0) >= 0")]
    NegativeConstantTerm(f64),
    #[error("logarithm of a series needs constant term 1, got {0}")]
    NonUnitConstantTerm(f64),
    #[error("series order {order} is below the required Fock level {level}")]
    OrderTooLow { order: usize, level: usize },
    #[error("unsupported working precision of {0} bits (use <= 53 or <= 106)")]
    UnsupportedPrecision(u32),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("coherent amplitude must be nonzero")]
    ZeroAmplitude,
    #[error("squeezing parameter |xi| = {0} must be below 1")]
    SqueezingOutOfRange(f64),
    #[error("state is not normalized: norm = {0}")]
    NotNormalized(f64),
    #[error("mean photon number is zero")]
    ZeroMeanPhotonNumber,
    #[error("invalid response function: {0}")]
    InvalidResponse(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("moment order {order} exceeds the number of diodes {diodes}")]
    OrderExceedsDiodes { order: usize, diodes: usize },
    #[error("moment matrix needs moments up to order {needed}, only {available} available")]
    InsufficientOrder { needed: usize, available: usize },
    #[error("mean click number {0} is degenerate (0 or N)")]
    DegenerateMean(f64),
    #[error("detector bank needs at least 2 diodes, got {0}")]
    DegenerateBank(usize),
    #[error("histogram is empty")]
    EmptyHistogram,
    #[error("histogram shape does not match: {0}")]
    ShapeMismatch(String),

    #[error("expectation has imaginary residue {0:e}")]
    NonHermitianResult(f64),
    #[error("click probabilities sum to {sum} (tail bound {tail:e})")]
    NormalizationViolation { sum: f64, tail: f64 },
    #[error("click probability c_{index} = {value:e} is negative beyond rounding")]
    NegativeProbability { index: usize, value: f64 },
    #[error("Fock-basis evaluation at n = {level} loses all precision (error bound {bound:e})")]
    IllConditioned { level: usize, bound: f64 },
    #[error("numerical quadrature did not converge (error estimate {0:e})")]
    QuadratureFailed(f64),
}

impl Error {
    /// True for violated numerical invariants, false for bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonHermitianResult(_)
                | Error::NormalizationViolation { .. }
                | Error::NegativeProbability { .. }
                | Error::IllConditioned { .. }
                | Error::QuadratureFailed(_)
                | Error::NotNormalized(_)
        )
    }
}
