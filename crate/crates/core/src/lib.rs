//! Maximum-entropy density estimation driven by single order statistics.
//!
//! A sample is mapped onto `[-1, 1]`, and a density `exp(Λ + Σ λ_j T_j(x))`
//! built from Chebyshev polynomials is searched for by random walk until the
//! sample, pushed through the model cdf, looks like sorted uniform random data
//! at a typical (not maximal) level of agreement.

pub mod bench;
pub mod clock;
pub mod diagnostics;
pub mod domain;
pub mod error;
pub mod io;
pub mod model;
pub mod optimizer;
pub mod quadrature;
pub mod rng;
pub mod scoring;

pub use domain::{DomainSpec, RawSample, SortedSample, SymmetryOption};
pub use error::{Error, Result};
pub use model::{LagrangeVector, MaxEntModel};
pub use optimizer::{fit, DomainOptions, FitEnsemble, OptimizerConfig, SolutionAttempt};
pub use quadrature::{CdfTable, GridConfig, QuadratureGrid};
pub use scoring::{ScoreReport, ScoringCalibration};
