//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes of the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Two objects that must share a dimension do not.
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    /// The amplitude chosen as the chart divisor is numerically zero.
    #[error(
        "pivot amplitude {pivot} has magnitude {magnitude:.3e}, below the floor {floor:.3e}; \
         choose another chart"
    )]
    PivotTooSmall {
        pivot: usize,
        magnitude: f64,
        floor: f64,
    },

    /// A matrix that must be Hermitian is not (max |H - H^dagger| entry shown).
    #[error("matrix is not Hermitian: max deviation {deviation:.3e} exceeds 1e-12")]
    NotHermitian { deviation: f64 },

    /// A NaN or infinity appeared where a finite number is required.
    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    /// A physical or numerical parameter is outside its allowed range.
    #[error("invalid specification: {message}")]
    InvalidSpec { message: String },

    /// The implicit damping system (I - M) u = b is numerically singular,
    /// which signals an unphysically large damping constant for the state.
    #[error(
        "implicit damping system is numerically singular (condition estimate {condition:.3e})"
    )]
    SingularDamping { condition: f64 },

    /// The adaptive integrator reduced its step below the representable minimum.
    #[error("step size underflow at t = {t:.6e} (step {step:.3e}); the problem is too stiff or singular")]
    StepSizeUnderflow { t: f64, step: f64 },

    /// A windowed statistic was asked of a series with too few samples.
    #[error("too few samples: need at least {needed}, found {found}")]
    TooFewSamples { needed: usize, found: usize },

    /// A scenario configuration could not be parsed.
    #[error("config parse error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    /// An output or input file operation failed.
    #[error("file I/O error: {0}")]
    FileIo(#[from] std::io::Error),

    /// A parameter sweep was requested with no values.
    #[error("sweep requested with an empty value list")]
    EmptySweep,
}
