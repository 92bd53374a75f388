use std::io;

use thiserror::Error;

use crate::optimizer::SolutionAttempt;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sample is empty")]
    EmptySample,

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),

    #[error("insufficient data: {retained} points retained, at least {required} required")]
    InsufficientData { retained: usize, required: usize },

    #[error("value {value} lies outside [{lower}, {upper}]")]
    OutOfDomain { value: f64, lower: f64, upper: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("integrand is not finite at x = {x}")]
    NonFiniteIntegrand { x: f64 },

    #[error("cumulative table decreases at node {index}")]
    CdfInconsistency { index: usize },

    #[error("calibration failed: slope {slope:.4}, intercept {intercept:.4} outside gates")]
    CalibrationFailed { slope: f64, intercept: f64 },

    #[error("ensemble incomplete: {accepted} of {wanted} solutions after {} attempts", .attempts.len())]
    EnsembleIncomplete {
        accepted: usize,
        wanted: usize,
        attempts: Vec<SolutionAttempt>,
    },

    #[error("unknown distribution `{0}`")]
    UnknownDistribution(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}
