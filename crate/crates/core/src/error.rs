use thiserror::Error;

/// Errors raised across the laboratory. Validation errors are caller mistakes;
/// the rest are numerical failures.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("singular kernel evaluation at r = s = {radius} for alpha = {alpha} <= 1; use cell-averaged assembly")]
    SingularEvaluation { radius: f64, alpha: f64 },

    #[error("adaptive quadrature did not reach tolerance {tol:e} within {evals} evaluations (error estimate {error:e})")]
    Quadrature { tol: f64, error: f64, evals: usize },

    #[error("divergent tail: tail exponent {exponent} must exceed alpha = {alpha}")]
    DivergentTail { exponent: f64, alpha: f64 },

    #[error("divergent integral: tail exponent {exponent} must exceed the dimension {dim}")]
    DivergentIntegral { exponent: f64, dim: u32 },

    #[error("no convergence after {iterations} iterations (residuals u: {residual_u:e}, v: {residual_v:e})")]
    NonConvergence {
        iterations: usize,
        residual_u: f64,
        residual_v: f64,
    },

    #[error("iteration collapsed to the trivial solution after {iterations} sweeps (sup u = {sup_u:e}, sup v = {sup_v:e})")]
    Collapse {
        iterations: usize,
        sup_u: f64,
        sup_v: f64,
    },

    #[error("fixed-point residual too large (u: {residual_u:e}, v: {residual_v:e}, tolerance {tol:e})")]
    Residual {
        residual_u: f64,
        residual_v: f64,
        tol: f64,
    },

    #[error("power-law identity inapplicable: {0}")]
    PowerLawRange(String),

    #[error("step size underflow at r = {radius:e}")]
    StepUnderflow { radius: f64 },

    #[error("non-finite state after r = {last_good:e}")]
    NonFinite { last_good: f64 },

    #[error("invalid bracket: {0}")]
    InvalidBracket(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// `true` for caller mistakes (bad parameters, bad inputs) as opposed to numerical failures.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Validation(_) | Error::Precondition(_) | Error::Io(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
