use alloc::string::String;

/// Everything that can go wrong in this crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),
    /// A structural parameter (sizes, degrees, thresholds) is invalid.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// The requested configuration cannot occur.
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// A root finder could not bracket a sign change.
    #[error("no bracket: {0}")]
    NoBracket(String),
    /// An exhaustive computation was asked for beyond its size guard.
    #[error("too large: {0}")]
    TooLarge(String),
    /// The asymptotic formula is outside its regime of validity.
    #[error("outside regime: {0}")]
    Regime(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! bail {
    ($variant:ident, $($arg:tt)*) => {
        return Err($crate::Error::$variant(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;
