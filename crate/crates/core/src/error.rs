use thiserror::Error;

/// Errors raised across meshing, assembly, eigensolves and analysis.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh pitch {h} does not divide {what} = {value}")]
    NonIntegerPitch { h: f64, what: &'static str, value: f64 },

    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point y = {y} lies outside the profile interval [0, {d}]")]
    OutOfDomain { y: f64, d: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("profile samples are not strictly increasing in y (line {line})")]
    NonMonotoneSamples { line: usize },

    #[error("profile samples cover [{lo}, {hi}], expected [0, {d}]")]
    RangeMismatch { lo: f64, hi: f64, d: f64 },

    #[error("degenerate triangle (area {area:e})")]
    DegenerateTriangle { area: f64 },

    #[error("edge tagged {0} is not a Robin edge")]
    WrongTag(&'static str),

    #[error("eigensolver did not converge after {iterations} iterations (worst residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("factorization of the shifted matrix failed at row {row} (shift {shift})")]
    FactorizationFailure { row: usize, shift: f64 },

    #[error("dimension {n} exceeds the dense limit {limit}")]
    DimensionTooLarge { n: usize, limit: usize },

    #[error("root of the secular equation is not bracketed on ({lo}, {hi})")]
    RootNotBracketed { lo: f64, hi: f64 },

    #[error("secular root {secular} disagrees with finite differences {fdm}")]
    OracleMismatch { secular: f64, fdm: f64 },

    #[error("bracket verdicts do not differ: {hi} at the upper end, {lo} at the lower end")]
    BracketInvalid { hi: String, lo: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Variant name, for machine-readable error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonIntegerPitch { .. } => "NonIntegerPitch",
            Error::DegenerateDomain(_) => "DegenerateDomain",
            Error::InvalidInput(_) => "InvalidInput",
            Error::OutOfDomain { .. } => "OutOfDomain",
            Error::Parse { .. } => "Parse",
            Error::NonMonotoneSamples { .. } => "NonMonotoneSamples",
            Error::RangeMismatch { .. } => "RangeMismatch",
            Error::DegenerateTriangle { .. } => "DegenerateTriangle",
            Error::WrongTag(_) => "WrongTag",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::FactorizationFailure { .. } => "FactorizationFailure",
            Error::DimensionTooLarge { .. } => "DimensionTooLarge",
            Error::RootNotBracketed { .. } => "RootNotBracketed",
            Error::OracleMismatch { .. } => "OracleMismatch",
            Error::BracketInvalid { .. } => "BracketInvalid",
            Error::Io(_) => "Io",
        }
    }

    /// Errors caused by the caller's parameters rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::NonIntegerPitch { .. }
                | Error::DegenerateDomain(_)
                | Error::InvalidInput(_)
                | Error::OutOfDomain { .. }
                | Error::Parse { .. }
                | Error::NonMonotoneSamples { .. }
                | Error::RangeMismatch { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
