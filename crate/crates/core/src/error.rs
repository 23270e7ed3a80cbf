//! Crate-wide error type.  Constructors validate their inputs up front so that
//! the numerical routines can assume finite, normalized, in-range data.

use thiserror::Error;

/// Errors produced by constructors and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A floating-point input was NaN or infinite.
    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    /// A state vector's norm was too far from 1 to renormalize silently.
    #[error("state norm^2 = {norm_sq} differs from 1 by more than 1e-9")]
    NotNormalized { norm_sq: f64 },

    /// A vector with (numerically) zero norm cannot be renormalized.
    #[error("cannot renormalize a zero-norm vector in {context}")]
    ZeroNorm { context: &'static str },

    /// An angle fell outside its allowed range.
    #[error("{name} = {value} out of range [{min}, {max})")]
    AngleOutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    /// A probability-like parameter fell outside [0, 1].
    #[error("{name} = {value} is not a probability in [0, 1]")]
    ProbabilityOutOfRange { name: &'static str, value: f64 },

    /// Expectation values are only defined for Hermitian operators.
    #[error("operator is not Hermitian (max deviation {max_dev:.3e})")]
    NonHermitian { max_dev: f64 },

    /// Conditioning on an outcome that has probability zero.
    #[error("outcome has probability zero for this state; collapse undefined")]
    DegenerateCollapse,

    /// Inverse operators exist only for strengths strictly inside (0, 1).
    #[error("measurement with p = {p}, q = {q} is not invertible")]
    NotInvertible { p: f64, q: f64 },

    /// A K-outcome strength table failed validation.
    #[error("invalid outcome-strength table: {detail}")]
    InvalidDistribution { detail: String },

    /// Exact path enumeration is capped to keep the branch count tractable.
    #[error("enumeration depth {depth} exceeds the maximum of {max}")]
    DepthTooLarge { depth: usize, max: usize },

    /// A simulation or grid configuration was empty or inconsistent.
    #[error("invalid configuration: {detail}")]
    InvalidConfig { detail: String },

    /// A likelihood surface with no finite entries has no maximum.
    #[error("likelihood surface contains no finite entries")]
    EmptySurface,

    /// Entropy terms require every involved probability to be positive.
    #[error("zero probability with a nonzero count in {context}")]
    ZeroProbability { context: &'static str },

    /// Plug-in mutual information needs a minimum sample count to be meaningful.
    #[error("contingency table holds {total} samples; at least {min} required")]
    UndersizedTable { total: u64, min: u64 },
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
