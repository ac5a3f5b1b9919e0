use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("improper transfer function: numerator degree {num} exceeds denominator degree {den}")]
    Improper { num: usize, den: usize },
    #[error("denominator is identically zero")]
    ZeroDenominator,
    #[error("polynomial degree {0} exceeds the supported maximum of 30")]
    DegreeTooHigh(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("ill-posed feedback interconnection: algebraic loop matrix is singular")]
    IllPosed,
    #[error("bilinear map is singular: I - A*T/2 is not invertible")]
    TustinSingular,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("matrix is not Hurwitz (largest real part {0:e})")]
    NotHurwitz(f64),
    #[error("no stabilizing Riccati solution: {0}")]
    NoStabilizingSolution(String),
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
    #[error("H-infinity synthesis infeasible at gamma = {gamma}: {reason}")]
    Infeasible { gamma: f64, reason: String },
    #[error("closed loop is unstable; poles: {0:?}")]
    UnstableClosedLoop(Vec<Complex64>),
    #[error("invalid analysis window: {0}")]
    Window(String),
    #[error("baseline design infeasible: {0}")]
    BaselineInfeasible(String),
    #[error("simulation diverged at t = {time} s (last good sample at {last_good} s)")]
    Divergence { time: f64, last_good: f64 },
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("controller {name}: {source}")]
    Controller { name: String, source: Box<Error> },
}

impl Error {
    /// The innermost error, looking through controller attribution.
    pub fn root(&self) -> &Error {
        match self {
            Error::Controller { source, .. } => source.root(),
            e => e,
        }
    }
}
