use thiserror::Error;

use crate::prox::ProxResult;

/// Errors raised by problem oracles, solvers, estimators and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point lies outside the domain of the objective")]
    DomainError,
    #[error("not available: {0}")]
    NotAvailable(String),
    #[error("bad shape: {0}")]
    BadShape(String),
    #[error("parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("step c = {c} violates 1/c > rho = {rho}")]
    StepTooLarge { c: f64, rho: f64 },
    #[error("inner solver exhausted {iterations} iterations; best residual {}", best.residual_norm)]
    InnerBudgetExhausted {
        iterations: usize,
        best: Box<ProxResult>,
    },
    #[error("problem has no gradient Lipschitz constant")]
    NotSmooth,
    #[error("optimal value f* is unknown; install a reference solution first")]
    NeedsReference,
    #[error("criterion {0} needs a reference prox and is only available in test mode")]
    CriterionUnverifiable(String),
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
