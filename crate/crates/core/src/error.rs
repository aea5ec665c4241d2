use thiserror::Error;

/// Errors raised across the pricing pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid interval [{lo}, {hi}]: need finite lo < hi")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("Chebyshev fit did not converge at degree {degree} (trailing coefficient ratio {tail:.3e})")]
    NonConvergence { degree: usize, tail: f64 },

    #[error("non-finite function value at x = {x}")]
    NonFiniteSample { x: f64 },

    #[error("zero function has no isolated roots")]
    ZeroFunction,

    #[error("intervals differ: [{a_lo}, {a_hi}] vs [{b_lo}, {b_hi}]")]
    IntervalMismatch {
        a_lo: f64,
        a_hi: f64,
        b_lo: f64,
        b_hi: f64,
    },

    #[error("piecewise function has no pieces")]
    EmptyPiecewise,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{0} has no closed-form density")]
    NoClosedForm(&'static str),

    #[error("Toeplitz system is singular or ill-conditioned (condition estimate {cond:.3e})")]
    SingularToeplitz { cond: f64 },

    #[error("vega unsupported for {0}")]
    VegaUnsupported(&'static str),

    #[error("quadrature did not converge (error estimate {estimate:.3e})")]
    QuadratureNonConvergence { estimate: f64 },
}

impl Error {
    /// True for errors caused by bad user input rather than numerical failure.
    pub fn is_parameter_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInterval { .. }
                | Error::InvalidParameter(_)
                | Error::NoClosedForm(_)
                | Error::VegaUnsupported(_)
                | Error::IntervalMismatch { .. }
                | Error::EmptyPiecewise
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
