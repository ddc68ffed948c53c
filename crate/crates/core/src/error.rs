use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ApError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("point is not in the set (violation {violation:.3e})")]
    OutsideSet { violation: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("linear solve failed: {0}")]
    LinearSolveFailure(String),

    #[error("inner projection solve stalled (error estimate {estimate:.3e}, target {target:.3e})")]
    StalledInnerSolve { estimate: f64, target: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("iterate left the kernel domain at iteration {iteration}")]
    DomainViolation { iteration: usize },

    #[error("iterates diverged at iteration {iteration} (residual {residual:.3e})")]
    Diverged { iteration: usize, residual: f64 },

    #[error("degenerate instance: {0}")]
    DegenerateInstance(String),
}

pub type Result<T> = std::result::Result<T, ApError>;

pub(crate) fn check_finite(v: &[f64], what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(ApError::NonFinite(what))
    }
}
