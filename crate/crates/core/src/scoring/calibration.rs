use std::fmt::Write as _;
use std::sync::OnceLock;

use super::{log_likelihood_slices, OrderStatTable};
use crate::error::{Error, Result};
use crate::rng;

pub const CALIBRATION_FORMAT: u32 = 1;
pub const DEFAULT_TARGET_COVERAGE: f64 = 0.40;
pub const FLOOR_COVERAGE: f64 = 0.05;
pub const MIN_CALIBRATION_TRIALS: usize = 1000;

const QUANTILE_COUNT: usize = 1001;
const SLOPE_TOL: f64 = 0.02;
const INTERCEPT_TOL: f64 = 0.05;

static BUNDLED: OnceLock<ScoringCalibration> = OnceLock::new();

/// Per-size summary of a calibration run.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRun {
    pub n: usize,
    pub trials: usize,
    /// Mean of `(1/N) ln P` over the trials, i.e. `L + ½ ln N`.
    pub mean_log_per_point: f64,
}

/// Least-squares fit of `E[(1/N) ln P]` against `ln N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
}

impl Regression {
    pub fn within_tolerance(&self) -> bool {
        (self.slope - 0.5).abs() <= SLOPE_TOL && (self.intercept + 0.4).abs() <= INTERCEPT_TOL
    }
}

/// Empirical distribution of the SURD score, stored as pooled quantiles.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoringCalibration {
    pub seed: u64,
    pub runs: Vec<CalibrationRun>,
    pub mean: f64,
    quantiles: Vec<f64>,
}

fn interpolated_quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

impl ScoringCalibration {
    /// Builds the table from pooled score values. Non-finite values are rejected.
    pub fn from_pooled(mut values: Vec<f64>, runs: Vec<CalibrationRun>, seed: u64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: i, value: values[i] });
        }
        values.sort_unstable_by(f64::total_cmp);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let quantiles = (0..QUANTILE_COUNT)
            .map(|k| interpolated_quantile(&values, k as f64 / (QUANTILE_COUNT - 1) as f64))
            .collect();
        Ok(Self { seed, runs, mean, quantiles })
    }

    /// Table shipped with the library.
    pub fn bundled() -> &'static ScoringCalibration {
        BUNDLED.get_or_init(|| {
            Self::parse(include_str!("../../data/calibration.txt")).expect("bundled calibration table is valid")
        })
    }

    pub fn quantiles(&self) -> &[f64] {
        &self.quantiles
    }

    /// Fraction of the SURD score distribution at or below `score`.
    pub fn coverage(&self, score: f64) -> f64 {
        let q = &self.quantiles;
        let last = q.len() - 1;
        if score.is_nan() || score < q[0] {
            return 0.0;
        }
        if score >= q[last] {
            return 1.0;
        }
        // largest k with q[k] <= score
        let k = q.partition_point(|&v| v <= score) - 1;
        let span = q[k + 1] - q[k];
        let frac = if span > 0.0 { (score - q[k]) / span } else { 0.0 };
        (k as f64 + frac) / last as f64
    }

    /// Score value at the given coverage level.
    pub fn threshold(&self, coverage: f64) -> f64 {
        interpolated_quantile(&self.quantiles, coverage.clamp(0.0, 1.0))
    }

    pub fn target_score(&self) -> f64 {
        self.threshold(DEFAULT_TARGET_COVERAGE)
    }

    pub fn floor_score(&self) -> f64 {
        self.threshold(FLOOR_COVERAGE)
    }

    pub fn total_trials(&self) -> usize {
        self.runs.iter().map(|r| r.trials).sum()
    }

    /// Regression over the per-size runs; `None` with fewer than two sizes.
    pub fn regression(&self) -> Option<Regression> {
        if self.runs.len() < 2 {
            return None;
        }
        let n = self.runs.len() as f64;
        let xs: Vec<f64> = self.runs.iter().map(|r| (r.n as f64).ln()).collect();
        let ys: Vec<f64> = self.runs.iter().map(|r| r.mean_log_per_point).collect();
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        if sxx == 0.0 {
            return None;
        }
        let slope = sxy / sxx;
        Some(Regression { slope, intercept: my - slope * mx })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# maxent SURD score calibration").unwrap();
        writeln!(s, "format {CALIBRATION_FORMAT}").unwrap();
        writeln!(s, "seed {}", self.seed).unwrap();
        writeln!(s, "mean {:.16e}", self.mean).unwrap();
        for r in &self.runs {
            writeln!(s, "size {} trials {} mean_log_per_point {:.16e}", r.n, r.trials, r.mean_log_per_point).unwrap();
        }
        writeln!(s, "quantiles {}", self.quantiles.len()).unwrap();
        for q in &self.quantiles {
            writeln!(s, "{q:.16e}").unwrap();
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let perr = |line: usize, message: String| Error::Parse { line, message };
        let mut format = None;
        let mut seed = 0;
        let mut mean = None;
        let mut runs = Vec::new();
        let mut quantiles: Vec<f64> = Vec::new();
        let mut expected_q = None;
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let num = |t: &str| t.parse::<f64>().map_err(|e| perr(lineno, format!("{t:?}: {e}")));
            let int = |t: &str| t.parse::<u64>().map_err(|e| perr(lineno, format!("{t:?}: {e}")));
            if expected_q.is_some() {
                quantiles.push(num(line)?);
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                ["format", v] => format = Some(int(v)?),
                ["seed", v] => seed = int(v)?,
                ["mean", v] => mean = Some(num(v)?),
                ["size", n, "trials", t, "mean_log_per_point", m] => runs.push(CalibrationRun {
                    n: int(n)? as usize,
                    trials: int(t)? as usize,
                    mean_log_per_point: num(m)?,
                }),
                ["quantiles", k] => expected_q = Some(int(k)? as usize),
                _ => return Err(perr(lineno, format!("unrecognised line {line:?}"))),
            }
        }
        if format != Some(CALIBRATION_FORMAT as u64) {
            return Err(perr(0, format!("unsupported or missing format tag {format:?}")));
        }
        let mean = mean.ok_or_else(|| perr(0, "missing mean".into()))?;
        if expected_q != Some(QUANTILE_COUNT) || quantiles.len() != QUANTILE_COUNT {
            return Err(perr(0, format!("expected {QUANTILE_COUNT} quantiles, found {}", quantiles.len())));
        }
        if quantiles.windows(2).any(|w| w[1] < w[0]) || quantiles.iter().any(|q| !q.is_finite()) {
            return Err(perr(0, "quantiles must be finite and nondecreasing".into()));
        }
        Ok(Self { seed, runs, mean, quantiles })
    }
}

fn trial_loglike(table: &OrderStatTable, seed: u64, trial: usize, buf: &mut Vec<f64>) -> f64 {
    let n = table.n();
    buf.resize(n, 0.0);
    let mut r = rng::stream(seed, &[n as u64, trial as u64]);
    rng::sorted_uniforms(&mut r, buf);
    log_likelihood_slices(table, buf, None)
}

/// Size-corrected SURD log-likelihoods (penalty excluded) for `trials`
/// independent samples of size `n`. Each trial has its own RNG stream, so
/// the result does not depend on thread count.
pub fn simulate_surd_loglikes(n: usize, trials: usize, seed: u64) -> Vec<f64> {
    let table = OrderStatTable::new(n);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..trials)
            .into_par_iter()
            .map_init(Vec::new, |buf, t| trial_loglike(&table, seed, t, buf))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let mut buf = Vec::new();
        (0..trials).map(|t| trial_loglike(&table, seed, t, &mut buf)).collect()
    }
}

/// Monte Carlo calibration of the SURD score distribution.
///
/// With two or more sizes the per-size means must follow
/// `E[(1/N) ln P] = ½ ln N - 0.4` within slope 0.02 and intercept 0.05.
pub fn calibrate(sizes: &[usize], trials: usize, seed: u64) -> Result<(ScoringCalibration, Option<Regression>)> {
    if sizes.is_empty() {
        return Err(Error::InvalidArgument("no calibration sizes given".into()));
    }
    if sizes.contains(&0) {
        return Err(Error::InvalidArgument("calibration sizes must be positive".into()));
    }
    if trials < MIN_CALIBRATION_TRIALS {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_CALIBRATION_TRIALS} trials per size are required, got {trials}"
        )));
    }
    let mut pooled = Vec::with_capacity(sizes.len() * trials);
    let mut runs = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let values = simulate_surd_loglikes(n, trials, seed);
        let mean_l = values.iter().sum::<f64>() / trials as f64;
        runs.push(CalibrationRun { n, trials, mean_log_per_point: mean_l + 0.5 * (n as f64).ln() });
        pooled.extend(values);
    }
    let cal = ScoringCalibration::from_pooled(pooled, runs, seed)?;
    let reg = cal.regression();
    if let Some(r) = reg {
        if !r.within_tolerance() {
            return Err(Error::CalibrationFailed { slope: r.slope, intercept: r.intercept });
        }
    }
    Ok((cal, reg))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> ScoringCalibration {
        let values: Vec<f64> = (0..=1000).map(|k| k as f64 / 1000.0).collect();
        ScoringCalibration::from_pooled(values, vec![], 1).unwrap()
    }

    #[test]
    fn coverage_interpolates() {
        let c = toy();
        assert_eq!(c.coverage(-1.0), 0.0);
        assert_eq!(c.coverage(2.0), 1.0);
        assert_eq!(c.coverage(f64::NEG_INFINITY), 0.0);
        assert!((c.coverage(0.4) - 0.4).abs() < 1e-12);
        assert!((c.coverage(0.4005) - 0.4005).abs() < 1e-12);
        assert!((c.threshold(0.25) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn text_round_trip() {
        let mut c = toy();
        c.runs.push(CalibrationRun { n: 256, trials: 1000, mean_log_per_point: 2.37 });
        let back = ScoringCalibration::parse(&c.to_text()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn parse_rejects_bad_tables() {
        let c = toy();
        let text = c.to_text().replace("format 1", "format 9");
        assert!(ScoringCalibration::parse(&text).is_err());
        let short: String = c.to_text().lines().take(20).map(|l| format!("{l}\n")).collect();
        assert!(ScoringCalibration::parse(&short).is_err());
    }

    #[test]
    fn calibrate_guards() {
        assert!(calibrate(&[], 1000, 0).is_err());
        assert!(calibrate(&[256], 10, 0).is_err());
        let (cal, reg) = calibrate(&[64], 1000, 0).unwrap();
        assert!(reg.is_none());
        assert_eq!(cal.total_trials(), 1000);
    }

    #[test]
    fn simulation_is_seeded() {
        assert_eq!(simulate_surd_loglikes(32, 10, 5), simulate_surd_loglikes(32, 10, 5));
        assert_ne!(simulate_surd_loglikes(32, 10, 5), simulate_surd_loglikes(32, 10, 6));
    }

    #[test]
    fn bundled_thresholds() {
        let c = ScoringCalibration::bundled();
        assert!((c.mean + 0.40).abs() < 0.02);
        assert!((c.target_score() + 0.37).abs() < 0.02);
        assert!(c.coverage(c.floor_score()) > 0.049);
    }

    proptest::proptest! {
        #[test]
        fn coverage_is_monotone(a in -5.0f64..2.0, b in -5.0f64..2.0) {
            let c = ScoringCalibration::bundled();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            proptest::prop_assert!(c.coverage(lo) <= c.coverage(hi));
        }
    }
}
