use thiserror::Error;

/// Every failure the library reports. Variant names are stable: the CLI prints
/// them verbatim and maps them to exit codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(
        "BallotViolation: prefix {prefix} of the degree sequence has negative Lukasiewicz height"
    )]
    BallotViolation { prefix: usize },
    #[error("SumMismatch: degrees sum to {sum}, expected {expected}")]
    SumMismatch { sum: usize, expected: usize },
    #[error("InvalidWalk: {0}")]
    InvalidWalk(String),
    #[error("NotAPartition: {0}")]
    NotAPartition(String),
    #[error("Crossing: blocks cross at {a} < {b} < {c} < {d}")]
    Crossing {
        a: usize,
        b: usize,
        c: usize,
        d: usize,
    },

    #[error("InvalidWeights: {0}")]
    InvalidWeights(String),
    #[error("RhoZero: weight sequence has zero radius of convergence")]
    RhoZero,
    #[error("NonconvergentSeries: {0}")]
    NonconvergentSeries(String),
    #[error("DegenerateSet: {0}")]
    DegenerateSet(String),

    #[error("NotDivisible: n = {n} is not divisible by gcd = {gcd}")]
    NotDivisible { n: usize, gcd: usize },
    #[error("TooLarge: n = {n} exceeds the enumeration limit {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("Infeasible: {0}")]
    Infeasible(String),
    #[error("BadSum: degree sequence sums to {sum}, expected {expected}")]
    BadSum { sum: i64, expected: i64 },

    #[error("DegeneratePi: pi(0) = 1")]
    DegeneratePi,
    #[error("InfiniteVariance: {0}")]
    InfiniteVariance(String),
    #[error("NotCritical: mean of pi is {mean}, the fluctuation formula needs mean 1")]
    NotCritical { mean: f64 },

    #[error("NegativeCumulant: kappa_{index} = {value}")]
    NegativeCumulant { index: usize, value: f64 },
    #[error("DiracInput: all cumulants of order >= 2 vanish")]
    DiracInput,
    #[error("RhoUndetermined: {0}")]
    RhoUndetermined(String),

    #[error("Parse: {0}")]
    Parse(String),
}

impl Error {
    /// The bare variant name, e.g. `"Infeasible"`.
    pub fn name(&self) -> &'static str {
        match self {
            Error::BallotViolation { .. } => "BallotViolation",
            Error::SumMismatch { .. } => "SumMismatch",
            Error::InvalidWalk(_) => "InvalidWalk",
            Error::NotAPartition(_) => "NotAPartition",
            Error::Crossing { .. } => "Crossing",
            Error::InvalidWeights(_) => "InvalidWeights",
            Error::RhoZero => "RhoZero",
            Error::NonconvergentSeries(_) => "NonconvergentSeries",
            Error::DegenerateSet(_) => "DegenerateSet",
            Error::NotDivisible { .. } => "NotDivisible",
            Error::TooLarge { .. } => "TooLarge",
            Error::Infeasible(_) => "Infeasible",
            Error::BadSum { .. } => "BadSum",
            Error::DegeneratePi => "DegeneratePi",
            Error::InfiniteVariance(_) => "InfiniteVariance",
            Error::NotCritical { .. } => "NotCritical",
            Error::NegativeCumulant { .. } => "NegativeCumulant",
            Error::DiracInput => "DiracInput",
            Error::RhoUndetermined(_) => "RhoUndetermined",
            Error::Parse(_) => "Parse",
        }
    }

    /// Requests that are well-formed but have no solution (exit code 2 in the CLI).
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::Infeasible(_) | Error::NotDivisible { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
