use thiserror::Error;

/// Errors raised by the numerics in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HwError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("pole of the gamma function at z = {re} + {im}i")]
    Pole { re: f64, im: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("no saddle: t too large (t = {t}, saddle branch exists only for t < {t_max})")]
    NoSaddle { t: f64, t_max: f64 },

    #[error("negative curvature: log u0 = {log_u0} <= 2 + 2 rho = {threshold}")]
    NegativeCurvature { log_u0: f64, threshold: f64 },

    /// The quadrature could not reach its relative tolerance. `log_bound` is
    /// the log of `|estimate| + error` in the units of the requested quantity,
    /// so callers can still use it as an upper bound.
    #[error(
        "tolerance not met: relative error {rel_error:e} > {rel_tol:e} after {nodes} nodes"
    )]
    ToleranceNotMet {
        estimate: f64,
        error: f64,
        rel_error: f64,
        rel_tol: f64,
        nodes: usize,
        log_bound: f64,
    },

    #[error("tail regime log|u| + B + 2 >= 12 violated at {points:?}")]
    PreconditionViolation { points: Vec<(f64, f64)> },
}

impl HwError {
    /// Process exit code for the CLI: 1 for usage errors, 2 for domain or
    /// convergence failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HwError::InvalidArgument(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, HwError>;
