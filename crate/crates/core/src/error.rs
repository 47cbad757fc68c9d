use thiserror::Error;

/// Every failure mode of the numerical pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("negative time t = {0}")]
    NegativeTime(f64),
    #[error("tabulated coefficient has no entries")]
    EmptyTable,
    #[error("time {t} precedes the first table entry at {start}")]
    OutsideTable { t: f64, start: f64 },
    #[error("coefficient {index} has no declared limit")]
    NoLimit { index: usize },
    #[error("coefficient {index} has no exponential decay law")]
    UnknownDecay { index: usize },
    #[error("leading coefficient is not identically 1")]
    NotMonic,
    #[error("invalid system: {0}")]
    InvalidSystem(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("step size underflow at t = {t} (h = {h})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("matrix exponential overflow")]
    Overflow,
    #[error("A(t) does not commute with its integral")]
    NotCommuting,
    #[error("singular window map at k = {k} (condition estimate {condition:e})")]
    SingularMap { k: usize, condition: f64 },
    #[error("matrix is singular")]
    Singular,
    #[error("k_t must be positive")]
    ZeroSteps,
    #[error("eigenvalue iteration did not converge")]
    EigenFail,
    #[error("every tail sample is zero")]
    AllZeroTail,
    #[error("no characteristic root on the dominant ring")]
    EmptyRing,
    #[error("pole is not a root of the denominator (residual {residual:e})")]
    PoleMismatch { residual: f64 },
    #[error("remaining denominator vanishes at the pole")]
    DividedPole,
    #[error("contour quadrature unresolved (doubling changed result by {change:e})")]
    NodeBudget { change: f64 },
    #[error("sequence does not decay (fitted base {base})")]
    NoDecay { base: f64 },
    #[error("no gap between the dominant ring and the correction tail")]
    NoGap,
    #[error("too few usable points for a fit ({points})")]
    DegenerateFit { points: usize },
    #[error("quadrature did not reach tolerance (estimate {estimate:e})")]
    QuadratureFail { estimate: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
