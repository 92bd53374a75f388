//! Post-fit quality metrics: Kolmogorov-Smirnov distance to a known truth,
//! Kullback-Leibler divergence, and a Monte Carlo figure of merit that asks
//! whether the sample looks like a typical draw from the fitted model.

use crate::domain::{fold_symmetric, SortedSample};
use crate::error::{Error, Result};
use crate::model::MaxEntModel;
use crate::optimizer::{model_spread, FitEnsemble};
use crate::quadrature::{build_grid, cdf_table, GridConfig};
use crate::rng;
use crate::scoring::{sqr_slice, SqrSeries};

pub const KS_GRID_POINTS: usize = 10_000;
pub const KL_GRID_POINTS: usize = 20_001;
const KOLMOGOROV_TERMS: usize = 100;
pub const FOM_REFERENCE_SAMPLES: usize = 10;
pub const FOM_TEST_SAMPLES: usize = 100;

/// A known distribution to compare estimates against.
pub trait Reference {
    fn pdf(&self, v: f64) -> f64;
    fn cdf(&self, v: f64) -> f64;
    /// Closed support; either end may be infinite.
    fn support(&self) -> (f64, f64);
}

/// Asymptotic Kolmogorov survival function `Q(x) = 2 Σ (-1)^{k-1} e^{-2k²x²}`.
pub fn kolmogorov_p(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    // the alternating series is useless this close to zero, where Q is 1 to double precision
    if x < 0.18 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=KOLMOGOROV_TERMS {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Sup distance between two cdfs over `KS_GRID_POINTS` equally spaced points
/// of `[lo, hi]`, with the Kolmogorov p-value at `sqrt(n) D`.
pub fn ks_metric(f_est: impl Fn(f64) -> f64, f_true: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> KsResult {
    let step = (hi - lo) / (KS_GRID_POINTS - 1) as f64;
    let statistic = (0..KS_GRID_POINTS)
        .map(|k| {
            let v = if k == KS_GRID_POINTS - 1 { hi } else { lo + k as f64 * step };
            (f_est(v) - f_true(v)).abs()
        })
        .fold(0.0, f64::max);
    KsResult { statistic, p_value: kolmogorov_p((n as f64).sqrt() * statistic) }
}

/// Kullback-Leibler divergence of `p_est` from `p_true` over `[lo, hi]`,
/// with both densities renormalised to unit mass on that window. Clipped
/// at zero.
///
/// Integrates by Simpson's rule in `t` with `v = lo + (hi - lo)(3t² - 2t³)`,
/// which clusters nodes at both ends so integrable endpoint singularities of
/// the truth are handled. `p_est` is floored at `epsilon`.
pub fn kl_metric(p_true: impl Fn(f64) -> f64, p_est: impl Fn(f64) -> f64, lo: f64, hi: f64, epsilon: f64) -> f64 {
    let m = KL_GRID_POINTS;
    let h = 1.0 / (m - 1) as f64;
    let width = hi - lo;
    let (mut cross, mut mass_p, mut mass_q) = (0.0, 0.0, 0.0);
    for k in 1..m - 1 {
        let t = k as f64 * h;
        let v = lo + width * t * t * (3.0 - 2.0 * t);
        let jac = 6.0 * width * t * (1.0 - t);
        let w = if k % 2 == 1 { 4.0 } else { 2.0 } * jac;
        let q = p_est(v).max(epsilon);
        mass_q += w * q;
        let p = p_true(v);
        if p > 0.0 && p.is_finite() {
            mass_p += w * p;
            cross += w * p * (p / q).ln();
        }
    }
    if mass_p <= 0.0 {
        return 0.0;
    }
    (cross / mass_p + (mass_q / mass_p).ln()).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FomResult {
    pub fom: f64,
    /// Ranks left out because the reference spread vanished there.
    pub excluded_ranks: usize,
}

fn draw_sorted(quantile: &(impl Fn(f64) -> f64 + Sync), n: usize, seed: u64, tag: u64, buf: &mut Vec<f64>) {
    buf.resize(n, 0.0);
    let mut r = rng::stream(seed, &[0x0046_4f4d, tag]);
    rng::sorted_uniforms(&mut r, buf);
    for u in buf.iter_mut() {
        *u = quantile(*u);
    }
}

/// Figure of merit in `(-∞, 1]`.
///
/// Ten reference and one hundred test samples of the sample's size are drawn
/// through `quantile`. Per rank, signed differences to the test samples give
/// the sample's mean offset, each reference's mean offset, and the mean and
/// spread over all reference/test pairs. Each offset is turned into
/// `1 - |μ_ref - μ| / (2 σ_ref)`; the result compares the sample's average of
/// that quantity with the references' distribution of it.
pub fn figure_of_merit(sample: &[f64], quantile: impl Fn(f64) -> f64 + Sync, seed: u64) -> Result<FomResult> {
    let n = sample.len();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if sample.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("figure of merit needs a sorted sample".into()));
    }
    // per-rank mean and population variance of the test samples
    let mut mean_t = vec![0.0; n];
    let mut m2_t = vec![0.0; n];
    let mut buf = Vec::with_capacity(n);
    for j in 0..FOM_TEST_SAMPLES {
        draw_sorted(&quantile, n, seed, 1000 + j as u64, &mut buf);
        let cnt = (j + 1) as f64;
        for k in 0..n {
            let d = buf[k] - mean_t[k];
            mean_t[k] += d / cnt;
            m2_t[k] += d * (buf[k] - mean_t[k]);
        }
    }
    let refs: Vec<Vec<f64>> = (0..FOM_REFERENCE_SAMPLES)
        .map(|i| {
            let mut r = Vec::with_capacity(n);
            draw_sorted(&quantile, n, seed, i as u64, &mut r);
            r
        })
        .collect();

    let nr = FOM_REFERENCE_SAMPLES as f64;
    let mut fom_ref_sum = 0.0;
    let mut fom_ref_sq = 0.0;
    let mut fom_ref_count = 0usize;
    let mut fom_sample_sum = 0.0;
    let mut used = 0usize;
    let mut excluded = 0usize;
    for k in 0..n {
        // over all (reference, test) pairs the difference has the mean of the
        // per-reference offsets and the sum of both population variances
        let offsets: Vec<f64> = refs.iter().map(|r| r[k] - mean_t[k]).collect();
        let mu_ref = offsets.iter().sum::<f64>() / nr;
        let var_r = refs.iter().map(|r| r[k]).map(|v| v * v).sum::<f64>() / nr
            - (refs.iter().map(|r| r[k]).sum::<f64>() / nr).powi(2);
        let var = var_r.max(0.0) + m2_t[k] / FOM_TEST_SAMPLES as f64;
        let sigma = var.sqrt();
        if !(sigma > 0.0) || !sigma.is_finite() {
            excluded += 1;
            continue;
        }
        for &o in &offsets {
            let f = 1.0 - (mu_ref - o).abs() / (2.0 * sigma);
            fom_ref_sum += f;
            fom_ref_sq += f * f;
            fom_ref_count += 1;
        }
        let mu_sample = sample[k] - mean_t[k];
        fom_sample_sum += 1.0 - (mu_ref - mu_sample).abs() / (2.0 * sigma);
        used += 1;
    }
    if used == 0 {
        return Err(Error::InvalidModel("reference spread vanishes at every rank".into()));
    }
    let c = fom_ref_count as f64;
    let mean_ref = fom_ref_sum / c;
    let sd_ref = (fom_ref_sq / c - mean_ref * mean_ref).max(0.0).sqrt();
    let mean_sample = fom_sample_sum / used as f64;
    let fom = if sd_ref > 0.0 {
        1.0 - (mean_ref - mean_sample).abs() / (2.0 * sd_ref)
    } else if mean_ref == mean_sample {
        1.0
    } else {
        f64::NEG_INFINITY
    };
    Ok(FomResult { fom, excluded_ranks: excluded })
}

/// Metrics reported for one fitted sample. KS and KL need a known truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsReport {
    pub ks: Option<KsResult>,
    pub kl: Option<f64>,
    pub fom: f64,
    pub surd_coverage: f64,
    pub multipliers_reported: usize,
}

/// Diagnostics of `model` from `ensemble`, optionally against a known truth.
pub fn diagnose(
    ensemble: &FitEnsemble,
    model: &MaxEntModel,
    coverage: f64,
    truth: Option<&dyn Reference>,
    seed: u64,
) -> Result<DiagnosticsReport> {
    let table = ensemble.cdf_table(model)?;
    let fom = figure_of_merit(&ensemble.unit_sample, |u| table.quantile_eval(u).value, seed)?.fom;
    let (ks, kl) = match truth {
        Some(t) => {
            let (lo, hi) = model.support();
            let n = model.domain.total;
            let ks = ks_metric(|v| model.original_cdf(&table, v), |v| t.cdf(v), lo, hi, n);
            let (tlo, thi) = t.support();
            let (klo, khi) = (lo.max(tlo), hi.min(thi));
            let eps = model.epsilon * 2.0 / model.domain.width();
            let kl = if klo < khi { kl_metric(|v| t.pdf(v), |v| model.original_pdf(v), klo, khi, eps) } else { 0.0 };
            (Some(ks), Some(kl))
        }
        None => (None, None),
    };
    Ok(DiagnosticsReport { ks, kl, fom, surd_coverage: coverage, multipliers_reported: model.multipliers_reported() })
}

/// Number of points in exported pdf and cdf curves.
pub const CURVE_POINTS: usize = 1001;

/// A model's pdf and cdf sampled on equally spaced points of its support.
#[derive(Debug, Clone, PartialEq)]
pub struct Curves {
    pub v: Vec<f64>,
    pub pdf: Vec<f64>,
    pub cdf: Vec<f64>,
}

fn support_points(model: &MaxEntModel, points: usize) -> Vec<f64> {
    let (lo, hi) = model.support();
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(|k| if k + 1 == points { hi } else { lo + k as f64 * step }).collect()
}

pub fn curves(ensemble: &FitEnsemble, model: &MaxEntModel, points: usize) -> Result<Curves> {
    if points < 2 {
        return Err(Error::InvalidArgument("a curve needs at least 2 points".into()));
    }
    let table = ensemble.cdf_table(model)?;
    let v = support_points(model, points);
    let pdf = v.iter().map(|&x| model.original_pdf(x)).collect();
    let cdf = v.iter().map(|&x| model.original_cdf(&table, x)).collect();
    Ok(Curves { v, pdf, cdf })
}

/// Pointwise spread of the accepted densities about the central one, as
/// `(v, central pdf, spread)`. `None` with fewer than two accepted models.
pub fn ensemble_spread(ensemble: &FitEnsemble, points: usize) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let v = support_points(ensemble.central_model(), points.max(2));
    let densities: Vec<Vec<f64>> =
        ensemble.accepted_attempts().map(|a| v.iter().map(|&x| a.model.original_pdf(x)).collect()).collect();
    let spread = model_spread(&densities, ensemble.central)?;
    let central = densities[ensemble.central].clone();
    Some((v, central, spread))
}

pub fn ensemble_sqr(ensemble: &FitEnsemble, model: &MaxEntModel) -> Result<SqrSeries> {
    Ok(sqr_slice(&ensemble.mapped_sample(model)?))
}

/// SQR series of a stored model against a sample, rebuilding the
/// integration grid the fit would have used.
pub fn sample_sqr(model: &MaxEntModel, values: &[f64], grid: &GridConfig) -> Result<SqrSeries> {
    let sorted = SortedSample::from_values(values.to_vec())?;
    let data = if model.symmetry.enabled { fold_symmetric(&sorted, model.symmetry) } else { sorted };
    let d = &model.domain;
    let unit: Vec<f64> = data
        .values()
        .iter()
        .filter(|v| (d.a..=d.b).contains(*v))
        .map(|&v| d.to_unit_unchecked(v).clamp(-1.0, 1.0))
        .collect();
    if unit.is_empty() {
        return Err(Error::InsufficientData { retained: 0, required: 1 });
    }
    let table = cdf_table(model, &build_grid(&unit, grid)?)?;
    let mut u = Vec::new();
    table.map_sorted(&unit, &mut u);
    Ok(sqr_slice(&u))
}

/// `(ks_p, fom)` pairs for scatter plots; reports without a KS value are skipped.
pub fn correlation_export(reports: &[DiagnosticsReport]) -> Vec<(f64, f64)> {
    reports.iter().filter_map(|r| r.ks.map(|ks| (ks.p_value, r.fom))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LagrangeVector, MaxEntModel};
    use crate::quadrature::{cdf_table, QuadratureGrid};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn kolmogorov_values() {
        assert_eq!(kolmogorov_p(0.0), 1.0);
        assert!((kolmogorov_p(1.36) - 0.05).abs() < 2e-3);
        assert!((kolmogorov_p(1.63) - 0.01).abs() < 1e-3);
        assert!(kolmogorov_p(5.0) < 1e-20);
        // continuity across the small-x cutoff
        assert!((kolmogorov_p(0.1801) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ks_examples() {
        let r = ks_metric(|u| u, |u| u, 0.0, 1.0, 100);
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
        let r = ks_metric(|u| u, |u| u * u, 0.0, 1.0, 100);
        assert!((r.statistic - 0.25).abs() < 1e-7);
        let n = 10_000;
        let d = 1.36 / (n as f64).sqrt();
        let r = ks_metric(|u| u, move |u| (u - d).max(0.0), 0.0, 1.0, n);
        assert!((r.p_value - 0.05).abs() < 3e-3);
    }

    #[test]
    fn kl_examples() {
        let grid = QuadratureGrid::uniform(401);
        let m = MaxEntModel::on_unit(LagrangeVector::new(vec![0.5]), &grid).unwrap();
        let kl = kl_metric(|_| 0.5, |x| m.density(x), -1.0, 1.0, 1e-12);
        let exact = 0.5f64.ln() - m.log_norm;
        assert_relative_eq!(kl, exact, epsilon = 1e-8);
        assert!((kl - 0.0415).abs() < 5e-4);
        assert_eq!(kl_metric(|x| m.density(x), |x| m.density(x), -1.0, 1.0, 1e-12), 0.0);
        // mass outside the window does not count against the estimate
        let scaled = kl_metric(|_| 0.5, |x| 0.8 * m.density(x), -1.0, 1.0, 1e-12);
        assert_relative_eq!(scaled, exact, epsilon = 1e-8);
        // integrable singularity at the lower end
        let kl = kl_metric(|v| (-v).exp() / (std::f64::consts::PI * v).sqrt(), |_| 0.1, 0.0, 10.0, 1e-12);
        assert!(kl.is_finite() && kl > 0.0);
    }

    #[test]
    fn fom_self_and_mismatch() {
        let grid = QuadratureGrid::uniform(401);
        let m = MaxEntModel::on_unit(LagrangeVector::new(vec![0.0, -1.0]), &grid).unwrap();
        let table = cdf_table(&m, &grid).unwrap();
        let q = |u: f64| table.quantile_eval(u).value;
        let mut own = Vec::new();
        draw_sorted(&q, 500, 99, 7, &mut own);
        let f = figure_of_merit(&own, q, 1).unwrap();
        assert!(f.fom > 0.0 && f.fom <= 1.0, "{f:?}");
        let flat: Vec<f64> = (0..500).map(|k| -1.0 + 2.0 * (k as f64 + 0.5) / 500.0).collect();
        let spike = MaxEntModel::on_unit(LagrangeVector::new(vec![0.0, -8.0]), &grid).unwrap();
        let st = cdf_table(&spike, &grid).unwrap();
        let f = figure_of_merit(&flat, |u| st.quantile_eval(u).value, 1).unwrap();
        assert!(f.fom < 0.0, "{f:?}");
        assert_eq!(
            figure_of_merit(&own, q, 3).unwrap(),
            figure_of_merit(&own, q, 3).unwrap()
        );
    }

    #[test]
    fn correlation_rows() {
        let r = DiagnosticsReport {
            ks: Some(KsResult { statistic: 0.1, p_value: 0.3 }),
            kl: None,
            fom: 0.8,
            surd_coverage: 0.4,
            multipliers_reported: 2,
        };
        assert_eq!(correlation_export(&[r]), vec![(0.3, 0.8)]);
        assert_eq!(correlation_export(&vec![r; 128]).len(), 128);
    }

    fn model_of(lambdas: Vec<f64>) -> (MaxEntModel, QuadratureGrid) {
        let grid = QuadratureGrid::uniform(201);
        (MaxEntModel::on_unit(LagrangeVector::new(lambdas), &grid).unwrap(), grid)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn ks_is_symmetric(a in proptest::collection::vec(-2.0f64..2.0, 1..5), b in proptest::collection::vec(-2.0f64..2.0, 1..5), n in 10usize..5000) {
            let (ma, ga) = model_of(a);
            let (mb, gb) = model_of(b);
            let (ta, tb) = (cdf_table(&ma, &ga).unwrap(), cdf_table(&mb, &gb).unwrap());
            let fa = |x: f64| ta.cdf_eval(x).value;
            let fb = |x: f64| tb.cdf_eval(x).value;
            prop_assert_eq!(ks_metric(fa, fb, -1.0, 1.0, n).statistic, ks_metric(fb, fa, -1.0, 1.0, n).statistic);
        }

        #[test]
        fn kl_of_model_with_itself_is_zero(lambdas in proptest::collection::vec(-3.0f64..3.0, 0..8)) {
            let (m, _) = model_of(lambdas);
            prop_assert!(kl_metric(|x| m.density(x), |x| m.density(x), -1.0, 1.0, 1e-12).abs() < 1e-10);
        }

        #[test]
        fn fom_is_affine_invariant(lambdas in proptest::collection::vec(-2.0f64..2.0, 1..4), alpha in 0.01f64..100.0, beta in -50.0f64..50.0, seed in 0u64..1000) {
            let (m, grid) = model_of(lambdas);
            let t = cdf_table(&m, &grid).unwrap();
            let q = |u: f64| t.quantile_eval(u).value;
            let mut sample = Vec::new();
            draw_sorted(&q, 200, seed, 1, &mut sample);
            let moved: Vec<f64> = sample.iter().map(|v| alpha * v + beta).collect();
            let a = figure_of_merit(&sample, q, seed).unwrap();
            let b = figure_of_merit(&moved, |u| alpha * q(u) + beta, seed).unwrap();
            prop_assert!((a.fom - b.fom).abs() < 1e-6, "{} vs {}", a.fom, b.fom);
        }
    }
}
