use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },

    #[error("quadrature did not converge: value {value}, error estimate {estimate:e} > tolerance {tolerance:e}")]
    NonConvergence {
        value: f64,
        estimate: f64,
        tolerance: f64,
    },

    #[error("eigensolver failed to converge: {0}")]
    ConvergenceFailure(String),

    #[error("hypergeometric series diverges for |z| = {0} >= 1")]
    SeriesDivergence(f64),

    #[error("lower parameter c = {0} is a nonpositive integer")]
    PoleAtC(f64),

    #[error("value {value} at index {index} is not strictly positive")]
    NonPositiveValues { index: usize, value: f64 },

    #[error("x = {x} lies outside the support [{lower}, {upper}]")]
    OutOfSupport { x: f64, lower: f64, upper: f64 },

    #[error("moment diverges: {0}")]
    MomentDivergence(String),

    #[error("mixture components do not share a support")]
    SupportMismatch,

    #[error("bad mixture weights: {0}")]
    BadWeights(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("degenerate distribution: m2 - m1^2 = {0} is not positive")]
    DegenerateDistribution(f64),

    #[error("grid has {0} points; at least {1} are required")]
    GridTooCoarse(usize, usize),

    #[error("Rayleigh quotient denominator vanishes (constant trial function)")]
    ZeroDenominator,

    #[error("Fokker-Planck step produced density {value:e} at t = {time}; reduce dt")]
    UnstableStep { time: f64, value: f64 },

    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),

    #[error("eigenfunction index {n} exceeds the discrete spectrum (n <= {n_max})")]
    BeyondDiscreteSpectrum { n: usize, n_max: usize },

    #[error("row {row} disagrees with the synthesized optimal process: lambda1 {lambda1_dev:e}, variance {variance_dev:e}, drift {drift_dev:e}")]
    RowMismatch {
        row: String,
        lambda1_dev: f64,
        variance_dev: f64,
        drift_dev: f64,
    },

    #[error("reflection failed: {0} consecutive rejected steps")]
    BoundaryViolation(usize),

    #[error("state became non-finite at step {0}")]
    NonFiniteState(usize),

    #[error("autocorrelation never decayed below {0}")]
    InsufficientDecay(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// True for errors caused by malformed input rather than numerical trouble.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInterval { .. }
                | Error::OutOfSupport { .. }
                | Error::SupportMismatch
                | Error::BadWeights(_)
                | Error::ParamOutOfRange(_)
                | Error::InvalidGrid(_)
                | Error::InvalidInput(_)
                | Error::GridTooCoarse(..)
                | Error::MomentDivergence(_)
                | Error::BeyondDiscreteSpectrum { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
