//! Single-order-statistics scoring of data mapped onto `[0, 1]`.
//!
//! If a trial cdf is right, the mapped points are sampled uniform random data
//! (SURD), and the `s`-th smallest of `N` follows a Beta(s, N - s + 1) law.
//! The score is the mean log of those densities with the `½ ln N` growth
//! removed, which makes its distribution nearly independent of `N`. A small
//! penalty for misplaced extreme points is subtracted before the score is
//! compared against the calibrated SURD distribution.

mod calibration;

pub use calibration::{
    calibrate, simulate_surd_loglikes, CalibrationRun, Regression, ScoringCalibration,
    CALIBRATION_FORMAT, DEFAULT_TARGET_COVERAGE, FLOOR_COVERAGE, MIN_CALIBRATION_TRIALS,
};

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Mean and standard deviation of the `s`-th of `n` sorted uniforms.
pub fn order_stat_moments(s: usize, n: usize) -> (f64, f64) {
    let mu = s as f64 / (n as f64 + 1.0);
    let sd = (mu * (1.0 - mu)).sqrt() / (n as f64 + 2.0).sqrt();
    (mu, sd)
}

fn ln_factorial(k: usize) -> f64 {
    if k < 2 {
        0.0
    } else {
        ln_gamma(k as f64 + 1.0)
    }
}

fn log_coefficient(s: usize, n: usize) -> f64 {
    ln_factorial(n) - ln_factorial(n - s) - ln_factorial(s - 1)
}

#[inline]
fn log_density_with(coef: f64, s: usize, n: usize, u: f64) -> f64 {
    let upper = (n - s) as f64;
    let lower = (s - 1) as f64;
    let mut v = coef;
    if upper > 0.0 {
        v += upper * (-u).ln_1p();
    }
    if lower > 0.0 {
        v += lower * u.ln();
    }
    v
}

/// `ln p_s(u | N)` for the `s`-th order statistic (1-based). Returns
/// negative infinity where the density vanishes.
pub fn log_order_stat_density(s: usize, n: usize, u: f64) -> f64 {
    assert!(s >= 1 && s <= n, "order statistic index {s} outside 1..={n}");
    log_density_with(log_coefficient(s, n), s, n, u)
}

/// Precomputed log-gamma coefficients for every rank of one sample size.
#[derive(Debug, Clone)]
pub struct OrderStatTable {
    n: usize,
    log_coef: Vec<f64>,
}

impl OrderStatTable {
    pub fn new(n: usize) -> Self {
        let log_coef = (1..=n).map(|s| log_coefficient(s, n)).collect();
        Self { n, log_coef }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn log_density(&self, s: usize, u: f64) -> f64 {
        log_density_with(self.log_coef[s - 1], s, self.n, u)
    }
}

/// Sorted points on `[0, 1]`. For a partition, `ranks` holds each point's
/// 1-based rank within the full sample of size `full_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitSortedSample {
    u: Vec<f64>,
    ranks: Option<Vec<usize>>,
    full_n: usize,
}

fn check_unit_sorted(u: &[f64]) -> Result<()> {
    if u.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(i) = u.iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::OutOfDomain { value: u[i], lower: 0.0, upper: 1.0 });
    }
    if let Some(i) = u.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument(format!("mapped sample decreases at index {}", i + 1)));
    }
    Ok(())
}

impl UnitSortedSample {
    pub fn new(u: Vec<f64>) -> Result<Self> {
        check_unit_sorted(&u)?;
        let full_n = u.len();
        Ok(Self { u, ranks: None, full_n })
    }

    pub fn partition(u: Vec<f64>, ranks: Vec<usize>, full_n: usize) -> Result<Self> {
        check_unit_sorted(&u)?;
        if ranks.len() != u.len() {
            return Err(Error::InvalidArgument("ranks and points differ in length".into()));
        }
        if ranks.iter().any(|&r| r == 0 || r > full_n) || ranks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(format!("ranks must increase within 1..={full_n}")));
        }
        Ok(Self { u, ranks: Some(ranks), full_n })
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn full_n(&self) -> usize {
        self.full_n
    }

    pub fn ranks(&self) -> Option<&[usize]> {
        self.ranks.as_deref()
    }
}

#[inline]
fn rank_at(ranks: Option<&[usize]>, i: usize) -> usize {
    ranks.map_or(i + 1, |r| r[i])
}

/// Size-corrected log-likelihood from slices; see [`log_likelihood`].
pub fn log_likelihood_slices(table: &OrderStatTable, u: &[f64], ranks: Option<&[usize]>) -> f64 {
    let n = table.n();
    let mut sum = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        sum += table.log_density(rank_at(ranks, i), ui);
    }
    if sum == f64::NEG_INFINITY || sum.is_nan() {
        return f64::NEG_INFINITY;
    }
    sum / u.len() as f64 - 0.5 * (n as f64).ln()
}

/// `L = (1/N_p) Σ ln p_{r_i}(u_i | N) - ½ ln N`.
///
/// Each point is scored with the order-statistic density of its rank in the
/// full sample, so the average over an evenly spaced partition estimates the
/// full-sample average. For a full sample this is the plain size-corrected
/// log-likelihood. Any vanishing density makes the result negative infinity.
pub fn log_likelihood(sample: &UnitSortedSample) -> f64 {
    let table = OrderStatTable::new(sample.full_n);
    log_likelihood_slices(&table, &sample.u, sample.ranks())
}

/// Boundary penalty from slices; see [`boundary_penalty`].
pub fn boundary_penalty_slices(u: &[f64], ranks: Option<&[usize]>, full_n: usize) -> f64 {
    let np = u.len();
    let p = ((0.005 * np as f64).floor() as usize).clamp(1, np);
    let scale = full_n as f64 + 1.0;
    let dev = |i: usize| (u[i] - rank_at(ranks, i) as f64 / scale).abs();
    let low: f64 = (0..p).map(dev).sum();
    let high: f64 = (np - p..np).map(dev).sum();
    (1.0 + 0.1 / p as f64 * (low + high)).ln()
}

/// `ln[1 + (0.1/p) Σ_low |u - μ| + (0.1/p) Σ_high |u - μ|]` over the `p`
/// lowest and `p` highest points, `p = max(1, floor(0.005 N_p))`.
pub fn boundary_penalty(sample: &UnitSortedSample) -> f64 {
    boundary_penalty_slices(&sample.u, sample.ranks(), sample.full_n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreReport {
    pub raw_loglike: f64,
    pub penalty: f64,
    pub effective: f64,
    /// Coverage of the penalty-adjusted score.
    pub coverage: f64,
    /// Coverage of the raw log-likelihood.
    pub raw_coverage: f64,
}

impl ScoreReport {
    pub(crate) fn from_parts(raw_loglike: f64, penalty: f64, calibration: &ScoringCalibration) -> Self {
        let effective = raw_loglike - penalty;
        Self {
            raw_loglike,
            penalty,
            effective,
            coverage: calibration.coverage(effective),
            raw_coverage: calibration.coverage(raw_loglike),
        }
    }

    pub fn rejected() -> Self {
        Self {
            raw_loglike: f64::NEG_INFINITY,
            penalty: 0.0,
            effective: f64::NEG_INFINITY,
            coverage: 0.0,
            raw_coverage: 0.0,
        }
    }
}

pub fn score_slices(
    table: &OrderStatTable,
    u: &[f64],
    ranks: Option<&[usize]>,
    calibration: &ScoringCalibration,
) -> ScoreReport {
    let raw = log_likelihood_slices(table, u, ranks);
    if !raw.is_finite() {
        return ScoreReport::rejected();
    }
    let penalty = boundary_penalty_slices(u, ranks, table.n());
    ScoreReport::from_parts(raw, penalty, calibration)
}

pub fn score(sample: &UnitSortedSample, calibration: &ScoringCalibration) -> ScoreReport {
    let table = OrderStatTable::new(sample.full_n);
    score_slices(&table, &sample.u, sample.ranks(), calibration)
}

/// Scaled residual quantile series: `Δ_s = sqrt(N + 2) (u_s - s / (N + 1))`
/// against `μ_s = s / (N + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SqrSeries {
    pub mu: Vec<f64>,
    pub delta: Vec<f64>,
}

impl SqrSeries {
    pub fn max_abs(&self) -> f64 {
        self.delta.iter().fold(0.0, |m, d| m.max(d.abs()))
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }
}

pub fn sqr_slice(u: &[f64]) -> SqrSeries {
    let n = u.len() as f64;
    let scale = (n + 2.0).sqrt();
    let mu: Vec<f64> = (1..=u.len()).map(|s| s as f64 / (n + 1.0)).collect();
    let delta = u.iter().zip(&mu).map(|(x, m)| scale * (x - m)).collect();
    SqrSeries { mu, delta }
}

pub fn sqr(sample: &UnitSortedSample) -> SqrSeries {
    sqr_slice(&sample.u)
}
