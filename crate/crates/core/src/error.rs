use thiserror::Error;

/// Everything that can go wrong while building a model or sampling from it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("need at least 4 sites, got {0}")]
    TooFewSites(usize),
    #[error("sites {0} and {1} coincide")]
    DuplicateSites(usize, usize),
    #[error("sites are collinear (polynomial design has rank {0} < 3)")]
    CollinearSites(usize),
    #[error("non-finite coordinate at site {0}")]
    NonFiniteSite(usize),
    #[error("thin-plate kernel only implemented for d=2, m=2 (got d={d}, m={m})")]
    UnsupportedKernel { d: usize, m: usize },
    #[error("kernel constant must be positive and finite, got {0}")]
    InvalidKernelConstant(f64),
    #[error("combined basis is ill-conditioned (condition estimate {0:.3e})")]
    IllConditionedBasis(f64),
    #[error("penalty has {0} numerically-zero eigenvalues, expected 3")]
    DegenerateRank(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid hyperparameter {name} = {value}")]
    InvalidHyperparameter { name: &'static str, value: f64 },
    #[error("smoothing parameter must be positive, got {0}")]
    NonPositiveEta(f64),
    #[error("noise variance must be positive, got {0}")]
    NonPositiveDelta0(f64),
    #[error("posterior of eta is not bounded enough for ratio-of-uniforms (tail slope {0:.3})")]
    UnboundedPosterior(f64),
    #[error("log density is not finite anywhere on the search interval")]
    DegenerateDensity,
    #[error("ratio-of-uniforms acceptance rate {rate:.2e} after {proposals} proposals")]
    AcceptanceStall { rate: f64, proposals: u64 },
    #[error("unknown {kind} '{name}'")]
    UnknownStrategy { kind: &'static str, name: String },
    #[error("invalid binomial panel: {0}")]
    InvalidPanel(String),
    #[error("chain needs iterations > burn-in (got {iterations} and {burn_in})")]
    InvalidChainLength { iterations: usize, burn_in: usize },
    #[error("chain has zero variance")]
    ZeroVariance,
    #[error("chain too short: need at least {need}, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("chain contains non-finite values")]
    NonFiniteChain,
}

/// Coarse grouping used by front ends to map errors onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Data,
    Numerical,
    Sampler,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            TooFewSites(_)
            | DuplicateSites(..)
            | CollinearSites(_)
            | NonFiniteSite(_)
            | DimensionMismatch { .. }
            | InvalidHyperparameter { .. }
            | InvalidPanel(_)
            | UnknownStrategy { .. }
            | InvalidChainLength { .. }
            | UnsupportedKernel { .. }
            | InvalidKernelConstant(_) => ErrorKind::Data,
            IllConditionedBasis(_) | DegenerateRank(_) => ErrorKind::Numerical,
            NonPositiveEta(_)
            | NonPositiveDelta0(_)
            | UnboundedPosterior(_)
            | DegenerateDensity
            | AcceptanceStall { .. }
            | ZeroVariance
            | TooShort { .. }
            | NonFiniteChain => ErrorKind::Sampler,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
