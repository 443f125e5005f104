use thiserror::Error;

/// Errors raised by the library. Variants map onto the CLI exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter such as an order or exponent lies outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed or inconsistent input data.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A parameter vector outside the parameter space of a family.
    #[error("parameter outside the parameter space: {0}")]
    ParameterSpace(String),

    /// The integrand produced a non-finite value.
    #[error("non-finite integrand value at {at:?}")]
    NonFinite { at: Vec<f64> },

    /// A family conversion that cannot be carried out.
    #[error("conversion error: {0}")]
    Conversion(String),

    /// The linear constraint set is empty.
    #[error("infeasible constraints: {0}")]
    Infeasible(String),

    /// An iterative solver stopped before meeting its tolerance.
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    /// The Jacobian of an estimating system is numerically singular.
    #[error("singular Jacobian (reciprocal condition {rcond:.3e})")]
    SingularJacobian { rcond: f64 },

    /// A theorem hypothesis required by the requested routine does not hold.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    /// The request belongs to a different estimation regime.
    #[error("wrong regime: {0}")]
    WrongRegime(String),

    /// The sample is degenerate for the requested estimator.
    #[error("degenerate sample: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for input or data problems as opposed to numerical failures.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_) | Error::Infeasible(_) | Error::Degenerate(_) | Error::NonFinite { .. }
        )
    }

    /// True for failures of an iterative method.
    pub fn is_convergence_error(&self) -> bool {
        matches!(self, Error::NonConvergence { .. } | Error::SingularJacobian { .. })
    }
}
