use thiserror::Error;

/// Errors raised by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("probability matrix is empty")]
    EmptyMatrix,

    #[error("probability matrix is not rectangular: row {row} has {found} entries, expected {expected}")]
    NotRectangular { row: usize, expected: usize, found: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("negative mass {value} at ({row}, {col})")]
    NegativeMass { row: usize, col: usize, value: f64 },

    #[error("total mass {sum} is not within 1e-6 of 1")]
    NotNormalized { sum: f64 },

    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("unknown axis `{0}`")]
    UnknownAxis(String),

    #[error("axis `{0}` appears in more than one argument")]
    OverlappingAxes(String),

    #[error("axis subset is empty")]
    EmptySubset,

    #[error("marginal of {0} has no positive-probability symbol")]
    DegenerateMarginal(&'static str),

    #[error("Markov condition {chain} violated: residual {residual:e} bits")]
    MarkovViolation { chain: &'static str, residual: f64 },

    #[error("double Markov extraction failed: {0}")]
    ExtractionFailure(String),

    #[error("invalid kernel: {0}")]
    KernelInvalid(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no restart produced a point with residual <= {threshold:e}")]
    NoFeasiblePoint { threshold: f64 },

    #[error("{what} needs {required} states, budget is {budget}")]
    SizeBudgetExceeded {
        what: &'static str,
        required: f64,
        budget: f64,
    },

    #[error("enumeration of {count:.3e} chains exceeds budget {budget:.3e}")]
    BudgetExceeded { count: f64, budget: f64 },

    #[error("no feasible deterministic chain within the given caps")]
    NoFeasibleChain,

    #[error("crossover probability {0} outside (0, 1/2)")]
    DeltaOutOfRange(f64),

    #[error("dichotomy violated at atom {atom:?}: H(X|u) = {hx:e}, H(Y|u) = {hy:e}")]
    LemmaViolation { atom: Vec<usize>, hx: f64, hy: f64 },

    #[error("binning rate {rate} outside (0, {max}]")]
    RateOutOfRange { rate: f64, max: f64 },

    #[error("requested key rate {requested} exceeds the chain's key potential {available}")]
    RateInfeasible { requested: f64, available: f64 },

    #[error("invalid example parameters: {0}")]
    InvalidParameters(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyMatrix => "EmptyMatrix",
            Error::NotRectangular { .. } => "NotRectangular",
            Error::NonFinite { .. } => "NonFinite",
            Error::NegativeMass { .. } => "NegativeMass",
            Error::NotNormalized { .. } => "NotNormalized",
            Error::InvalidAlphabet(_) => "InvalidAlphabet",
            Error::UnknownAxis(_) => "UnknownAxis",
            Error::OverlappingAxes(_) => "OverlappingAxes",
            Error::EmptySubset => "EmptySubset",
            Error::DegenerateMarginal(_) => "DegenerateMarginal",
            Error::MarkovViolation { .. } => "MarkovViolation",
            Error::ExtractionFailure(_) => "ExtractionFailure",
            Error::KernelInvalid(_) => "KernelInvalid",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::NoFeasiblePoint { .. } => "NoFeasiblePoint",
            Error::SizeBudgetExceeded { .. } => "SizeBudgetExceeded",
            Error::BudgetExceeded { .. } => "BudgetExceeded",
            Error::NoFeasibleChain => "NoFeasibleChain",
            Error::DeltaOutOfRange(_) => "DeltaOutOfRange",
            Error::LemmaViolation { .. } => "LemmaViolation",
            Error::RateOutOfRange { .. } => "RateOutOfRange",
            Error::RateInfeasible { .. } => "RateInfeasible",
            Error::InvalidParameters(_) => "InvalidParameters",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
