use thiserror::Error;

use crate::circuit::Violation;
use crate::compiler::Backend;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("circuit not supported by backend {backend}: {}", join_violations(.violations))]
    Validation {
        backend: Backend,
        violations: Vec<Violation>,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid term: {0}")]
    InvalidTerm(String),

    #[error("register mismatch: {0}")]
    RegisterMismatch(String),

    #[error("backend/circuit mismatch: {0}")]
    BasisMismatch(String),

    #[error("resource guard: {0}")]
    ResourceGuard(String),

    #[error("step size dt = {dt} exceeds guard {limit} (0.1 / |H|_est)")]
    StepSize { dt: f64, limit: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
