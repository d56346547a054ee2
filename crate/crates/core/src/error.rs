use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{field} = {value} is out of range (expected {expected})")]
    Range {
        field: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not symmetric: asymmetry {asymmetry:e} exceeds {tol:e}")]
    NotSymmetric { asymmetry: f64, tol: f64 },

    #[error("iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("Newton solve did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonFailed { iterations: usize, residual: f64 },

    #[error("integration failed at step {step}: {source}")]
    StepFailed { step: usize, source: Box<Error> },

    #[error("no verdict change between r = {lo} and r = {hi}")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("{family} at r = {r}, omega0 = {omega0}: {source}")]
    AtGridPoint {
        family: String,
        r: f64,
        omega0: f64,
        source: Box<Error>,
    },

    #[error("{path}: {message}")]
    Spec { path: String, message: String },

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
