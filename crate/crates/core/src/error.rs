use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate measure: {0}")]
    DegenerateMeasure(String),
    #[error("{what} did not converge after {iterations} iterations")]
    Convergence { what: String, iterations: usize },
    #[error("recovered mass deviates from 1 by {defect:e}")]
    MassDefect { defect: f64 },
    #[error("exponent p = {p} outside the integrability range (0, {threshold})")]
    ThresholdExceeded { p: f64, threshold: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("operand is a scalar multiple of the identity: {0}")]
    ScalarOperand(String),
    #[error("potential decreased by {drop:e} between t = {t_prev} and t = {t_next}")]
    MonotonicityViolation { t_prev: f64, t_next: f64, drop: f64 },
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn convergence(what: impl Into<String>, iterations: usize) -> Self {
        Error::Convergence { what: what.into(), iterations }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
