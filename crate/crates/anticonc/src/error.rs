use std::fmt;

/// Errors shared across the toolkit's modules.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Model construction rejected the parameters (weights, sigma, atom list).
    InvalidModel(String),
    /// Coefficient input rejected (empty, non-finite, inconsistent dimensions).
    InvalidCoefficients(String),
    /// The symmetrized variable never reaches |X - X'| >= 2, so the
    /// conditional law does not exist.
    DegenerateSymmetrization,
    /// The eta range [1/(2*sup_norm), D] is empty.
    EmptyDomain { eta_start: f64, d_param: f64 },
    /// The exact 1-D solver would need more breakpoint cells than allowed.
    BreakpointBudgetExceeded { needed: u64, cap: u64 },
    /// No eta with |eta| <= D satisfies max_k |eta . a_k| >= 1/2.
    InfeasibleDomain,
    /// Exact enumeration of the sum's support would exceed the cap.
    EnumerationBudgetExceeded { needed: u64, cap: u64 },
    /// Operation defined for atomic models only.
    NonAtomicModel(&'static str),
    /// Exact concentration for this model/dimension is not implemented.
    UnsupportedExact(String),
    /// p = 0: the theorem right-hand side is undefined. Rescaling the
    /// window (scale K = 2) usually restores p > 0.
    InvalidP,
    /// Gram matrix numerically singular: the vectors do not span R^d.
    DegenerateGram { det: f64 },
    /// Calibration needs at least one usable instance.
    EmptyCorpus,
    /// Monte Carlo estimator needs at least 1000 samples.
    TooFewSamples { given: u64 },
    /// Invalid argument (named, with the offending value or a short reason).
    InvalidArgument { name: &'static str, value: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidModel(msg) => write!(f, "InvalidModel: {msg}"),
            Error::InvalidCoefficients(msg) => write!(f, "InvalidCoefficients: {msg}"),
            Error::DegenerateSymmetrization => {
                write!(f, "DegenerateSymmetrization: P{{|X - X'| >= 2}} = 0")
            }
            Error::EmptyDomain { eta_start, d_param } => write!(
                f,
                "EmptyDomain: eta range [{eta_start}, {d_param}] is empty"
            ),
            Error::BreakpointBudgetExceeded { needed, cap } => write!(
                f,
                "BreakpointBudgetExceeded: {needed} breakpoints exceed cap {cap}; \
                 use the certified solver or raise the budget"
            ),
            Error::InfeasibleDomain => write!(
                f,
                "InfeasibleDomain: no eta with |eta| <= D has max_k |eta . a_k| >= 1/2"
            ),
            Error::EnumerationBudgetExceeded { needed, cap } => write!(
                f,
                "EnumerationBudgetExceeded: support size {needed} exceeds cap {cap}; \
                 use Monte Carlo or raise the budget"
            ),
            Error::NonAtomicModel(op) => write!(f, "NonAtomicModel: {op} requires an atomic model"),
            Error::UnsupportedExact(msg) => write!(f, "UnsupportedExact: {msg}"),
            Error::InvalidP => write!(
                f,
                "InvalidP: p must be positive (p = 0 means Q(X) = 1); \
                 retry with window scale K = 2"
            ),
            Error::DegenerateGram { det } => write!(
                f,
                "DegenerateGram: det = {det:e}; coefficient vectors do not span R^d"
            ),
            Error::EmptyCorpus => write!(f, "EmptyCorpus: no usable calibration instances"),
            Error::TooFewSamples { given } => {
                write!(f, "TooFewSamples: {given} < 1000 Monte Carlo samples")
            }
            Error::InvalidArgument { name, value } => {
                write!(f, "InvalidArgument: {name} = {value}")
            }
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
