//! Browser bindings: draw a benchmark sample, fit it, and look at the SQR
//! plot of exact uniforms for comparison.

use maxent_core::bench::make_distribution;
use maxent_core::diagnostics::{self, CURVE_POINTS};
use maxent_core::rng;
use maxent_core::scoring::sqr_slice;
use maxent_core::{fit, DomainOptions, Error, OptimizerConfig, RawSample, ScoringCalibration, SymmetryOption};
use wasm_bindgen::prelude::*;

fn js_err(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Draws `n` values from a named benchmark distribution.
#[wasm_bindgen(js_name = drawSample)]
pub fn draw_sample(dist: &str, n: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    let d = make_distribution(dist).map_err(js_err)?;
    Ok(d.sample_seeded(n, seed).map_err(js_err)?.values().to_vec())
}

#[wasm_bindgen]
pub struct FitSummary {
    v: Vec<f64>,
    pdf: Vec<f64>,
    spread: Vec<f64>,
    sqr_mu: Vec<f64>,
    sqr_delta: Vec<f64>,
    multipliers: usize,
    coverage: f64,
    fom: f64,
    accepted: usize,
    attempts: usize,
}

#[wasm_bindgen]
impl FitSummary {
    #[wasm_bindgen(getter)]
    pub fn v(&self) -> Vec<f64> {
        self.v.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn pdf(&self) -> Vec<f64> {
        self.pdf.clone()
    }

    /// Pointwise spread of the ensemble; empty with one solution.
    #[wasm_bindgen(getter)]
    pub fn spread(&self) -> Vec<f64> {
        self.spread.clone()
    }

    #[wasm_bindgen(getter, js_name = sqrMu)]
    pub fn sqr_mu(&self) -> Vec<f64> {
        self.sqr_mu.clone()
    }

    #[wasm_bindgen(getter, js_name = sqrDelta)]
    pub fn sqr_delta(&self) -> Vec<f64> {
        self.sqr_delta.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn multipliers(&self) -> usize {
        self.multipliers
    }

    #[wasm_bindgen(getter)]
    pub fn coverage(&self) -> f64 {
        self.coverage
    }

    #[wasm_bindgen(getter)]
    pub fn fom(&self) -> f64 {
        self.fom
    }

    #[wasm_bindgen(getter)]
    pub fn accepted(&self) -> usize {
        self.accepted
    }

    #[wasm_bindgen(getter)]
    pub fn attempts(&self) -> usize {
        self.attempts
    }
}

/// Fits `values` with the bundled calibration. `symmetric_about` is NaN for
/// no folding.
#[wasm_bindgen(js_name = fitSample)]
pub fn fit_sample(values: Vec<f64>, seed: u64, solutions: usize, symmetric_about: f64) -> Result<FitSummary, JsError> {
    let sample = RawSample::new(values).map_err(js_err)?;
    let opts = DomainOptions {
        symmetry: if symmetric_about.is_nan() { SymmetryOption::NONE } else { SymmetryOption::about(symmetric_about) },
        ..DomainOptions::default()
    };
    let cfg = OptimizerConfig { seed, solutions_wanted: solutions.max(1), ..OptimizerConfig::default() };
    let ens = fit(&sample, &opts, &cfg, ScoringCalibration::bundled()).map_err(js_err)?;
    let central = ens.central_attempt();
    let curves = diagnostics::curves(&ens, &central.model, CURVE_POINTS).map_err(js_err)?;
    let sqr = diagnostics::ensemble_sqr(&ens, &central.model).map_err(js_err)?;
    let report = diagnostics::diagnose(&ens, &central.model, central.report.coverage, None, seed).map_err(js_err)?;
    let spread = diagnostics::ensemble_spread(&ens, CURVE_POINTS).map(|(_, _, s)| s).unwrap_or_default();
    Ok(FitSummary {
        v: curves.v,
        pdf: curves.pdf,
        spread,
        sqr_mu: sqr.mu,
        sqr_delta: sqr.delta,
        multipliers: central.model.multipliers_reported(),
        coverage: central.report.coverage,
        fom: report.fom,
        accepted: ens.accepted.len(),
        attempts: ens.attempts.len(),
    })
}

/// SQR deltas of `n` sorted exact uniforms.
#[wasm_bindgen(js_name = uniformSqr)]
pub fn uniform_sqr(n: usize, seed: u64) -> Vec<f64> {
    let mut u = vec![0.0; n];
    rng::sorted_uniforms(&mut rng::stream(seed, &[]), &mut u);
    sqr_slice(&u).delta
}
