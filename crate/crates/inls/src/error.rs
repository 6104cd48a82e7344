use thiserror::Error;

/// Every failure the library reports. `reason()` gives the stable machine tag.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("OutOfRange(n): {0}")]
    OutOfRangeN(String),
    #[error("OutOfRange(b): {0}")]
    OutOfRangeB(String),
    #[error("OutOfRange(alpha): {0}")]
    OutOfRangeAlpha(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("SingularAtOrigin: weight_eps = 0 but a sample sits at |x| = 0")]
    SingularAtOrigin,
    #[error("ResampleOutOfDomain: {0}")]
    ResampleOutOfDomain(String),
    #[error("GridMismatch: {0}")]
    GridMismatch(String),
    #[error("GridCutoffMismatch: cutoff was sampled on a different grid")]
    GridCutoffMismatch,
    #[error("TailMassExceeded: fraction {fraction:.3e} in the outer shell")]
    TailMassExceeded { fraction: f64 },
    #[error("SymmetryViolation: deviation {0:.3e}")]
    SymmetryViolation(f64),
    #[error("ZeroField")]
    ZeroField,
    #[error("VarianceUnreliable")]
    VarianceUnreliable,
    #[error("NoConvergence({max_iter}): last delta {delta:.3e}, residual {residual:.3e}")]
    NoConvergence {
        max_iter: usize,
        delta: f64,
        residual: f64,
    },
    #[error("NonPositive: iterate lost positivity")]
    NonPositive,
    #[error("AboveThreshold: A = {a} >= {threshold}")]
    AboveThreshold { a: f64, threshold: f64 },
    #[error("InsufficientSamples: {0}")]
    InsufficientSamples(usize),
    #[error("NotAtThreshold: E M^sigma ratio {0}")]
    NotAtThreshold(f64),
    #[error("ConditionsInconsistent: {0}")]
    ConditionsInconsistent(String),
    #[error("InvalidControls: {0}")]
    InvalidControls(String),
    #[error("config: {0}")]
    Config(String),
    #[error("OutputConflict: {0}")]
    OutputConflict(String),
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Stable short tag, e.g. `OutOfRange(b)`.
    pub fn reason(&self) -> String {
        match self {
            Error::OutOfRangeN(_) => "OutOfRange(n)".into(),
            Error::OutOfRangeB(_) => "OutOfRange(b)".into(),
            Error::OutOfRangeAlpha(_) => "OutOfRange(alpha)".into(),
            Error::InvalidGrid(_) => "InvalidGrid".into(),
            Error::InvalidField(_) => "InvalidField".into(),
            Error::SingularAtOrigin => "SingularAtOrigin".into(),
            Error::ResampleOutOfDomain(_) => "ResampleOutOfDomain".into(),
            Error::GridMismatch(_) => "GridMismatch".into(),
            Error::GridCutoffMismatch => "GridCutoffMismatch".into(),
            Error::TailMassExceeded { .. } => "TailMassExceeded".into(),
            Error::SymmetryViolation(_) => "SymmetryViolation".into(),
            Error::ZeroField => "ZeroField".into(),
            Error::VarianceUnreliable => "VarianceUnreliable".into(),
            Error::NoConvergence { max_iter, .. } => format!("NoConvergence({max_iter})"),
            Error::NonPositive => "NonPositive".into(),
            Error::AboveThreshold { .. } => "AboveThreshold".into(),
            Error::InsufficientSamples(_) => "InsufficientSamples".into(),
            Error::NotAtThreshold(_) => "NotAtThreshold".into(),
            Error::ConditionsInconsistent(_) => "ConditionsInconsistent".into(),
            Error::InvalidControls(_) => "InvalidControls".into(),
            Error::Config(_) => "Config".into(),
            Error::OutputConflict(_) => "OutputConflict".into(),
            Error::Io(_) => "Io".into(),
        }
    }

    /// Process exit status: 2 validation, 3 output conflict, 4 runtime guard, 5 solver failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::OutOfRangeN(_)
            | Error::OutOfRangeB(_)
            | Error::OutOfRangeAlpha(_)
            | Error::InvalidGrid(_)
            | Error::InvalidField(_)
            | Error::InvalidControls(_)
            | Error::GridMismatch(_)
            | Error::GridCutoffMismatch
            | Error::Config(_) => 2,
            Error::OutputConflict(_) => 3,
            Error::NoConvergence { .. } | Error::NonPositive => 5,
            _ => 4,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
