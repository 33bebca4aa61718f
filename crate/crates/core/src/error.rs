use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("P(k) is singular at k = 0")]
    SingularDiagonalizer,
    #[error("k = 0 is rejected by this solver")]
    Origin,
    #[error("index pair ({i}, {j}) out of range")]
    Index { i: usize, j: usize },
    #[error("singular matrix in {0}")]
    Singular(&'static str),
    #[error("domain violation: {what} is not defined at k = {k_re}{k_im:+}i")]
    DomainViolation { what: String, k_re: f64, k_im: f64 },
    #[error("zero-mean violation: integral of u1 is {0:e}")]
    ZeroMeanViolation(f64),
    #[error("possible soliton near k = {k_re}{k_im:+}i")]
    PossibleSoliton { k_re: f64, k_im: f64 },
    #[error("Fredholm determinant nearly vanishes at k = {k_re}{k_im:+}i")]
    FredholmSingular { k_re: f64, k_im: f64 },
    #[error("assumption violation: {0}")]
    AssumptionViolation(String),
    #[error("extrapolation spread {0:e} exceeds tolerance, increase R")]
    InsufficientR(f64),
    #[error("evolution diverged at t = {0}")]
    EvolutionDiverged(f64),
    #[error("reflection sample needed at k = {0} is outside the sampled grid")]
    ExtrapolationRefused(f64),
    #[error("{0} grid is empty")]
    GridEmpty(&'static str),
    #[error("pattern fit residual {0:e} exceeds tolerance")]
    PatternFit(f64),
    #[error("step size underflow in ODE integration at x = {0}")]
    StepUnderflow(f64),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(what: impl Into<String>, k: num_complex::Complex64) -> Self {
        Error::DomainViolation { what: what.into(), k_re: k.re, k_im: k.im }
    }

    /// Numerical-assumption failures, as opposed to bad input or bugs.
    pub fn is_assumption_failure(&self) -> bool {
        matches!(
            self,
            Error::PossibleSoliton { .. }
                | Error::FredholmSingular { .. }
                | Error::AssumptionViolation(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
