//! Sample ingestion and the analysis window.
//!
//! A fit works on `[-1, 1]`. This module decides which interval `[a, b]` of the
//! original variable is mapped there: either an extension slightly beyond the
//! observed range, or a censor window built from the quartiles when the data
//! has very extreme outliers. Observations outside a censor window are dropped
//! but counted so the final density can carry the retained mass `R_ab`.

use crate::error::{Error, Result};

/// Default outlier coefficient for the quartile window.
pub const DEFAULT_CENSOR_C: f64 = 7.0;

/// Fewest retained observations a window may hold.
pub const MIN_RETAINED: usize = 6;

/// Observations as read, in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSample {
    values: Vec<f64>,
}

impl RawSample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A nondecreasing copy of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedSample {
    values: Vec<f64>,
}

impl SortedSample {
    /// Sorts `values`, rejecting empty input and non-finite entries.
    pub fn from_values(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// 1-based order statistic `V^(s)`.
    fn order(&self, s: usize) -> f64 {
        self.values[s - 1]
    }
}

pub fn sort_sample(raw: &RawSample) -> Result<SortedSample> {
    SortedSample::from_values(raw.values.clone())
}

/// Empirical quantile by linear interpolation of the order statistics at
/// rank `q (N - 1) + 1`.
pub fn quantile_empirical(sorted: &SortedSample, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidArgument(format!("quantile level {q} outside [0, 1]")));
    }
    let v = sorted.values();
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    let frac = pos - lo as f64;
    Ok(v[lo] + frac * (v[hi] - v[lo]))
}

/// Bounds that extend past the extreme observations by their gap to the 5th
/// lowest and 5th highest observation. Samples with fewer than six points use the full range as
/// the gap instead.
pub fn extension_bounds(sorted: &SortedSample) -> Result<(f64, f64)> {
    let n = sorted.len();
    let (lo, hi) = (sorted.min(), sorted.max());
    let (a, b) = if n >= 6 {
        (lo - (sorted.order(5) - lo), hi + (hi - sorted.order(n - 4)))
    } else {
        let spread = hi - lo;
        (lo - spread, hi + spread)
    };
    if a >= b {
        return Err(Error::DegenerateDomain(format!(
            "all {n} observations equal {lo}; a density needs a support of positive length"
        )));
    }
    Ok((a, b))
}

/// Quartile fences `Q25 - c IQR` and `Q75 + c IQR`.
pub fn outlier_bounds(sorted: &SortedSample, c: f64) -> Result<(f64, f64)> {
    if sorted.len() < 4 {
        return Err(Error::InsufficientData { retained: sorted.len(), required: 4 });
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::InvalidArgument(format!("outlier coefficient {c} must be positive")));
    }
    let q25 = quantile_empirical(sorted, 0.25)?;
    let q75 = quantile_empirical(sorted, 0.75)?;
    let iqr = q75 - q25;
    if iqr <= 0.0 {
        return Err(Error::DegenerateDomain(format!(
            "interquartile range is zero (Q25 = Q75 = {q25})"
        )));
    }
    Ok((q25 - c * iqr, q75 + c * iqr))
}

/// Reflection about a symmetry line, applied before the window is resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryOption {
    pub enabled: bool,
    pub center: f64,
}

impl SymmetryOption {
    pub const NONE: SymmetryOption = SymmetryOption { enabled: false, center: 0.0 };

    pub fn about(center: f64) -> Self {
        Self { enabled: true, center }
    }
}

impl Default for SymmetryOption {
    fn default() -> Self {
        Self::NONE
    }
}

/// Maps every value to `center + |v - center|` and re-sorts.
pub fn fold_symmetric(sorted: &SortedSample, sym: SymmetryOption) -> SortedSample {
    if !sym.enabled {
        return sorted.clone();
    }
    let mut values: Vec<f64> = sorted.values().iter().map(|&v| sym.center + (v - sym.center).abs()).collect();
    values.sort_by(f64::total_cmp);
    SortedSample { values }
}

/// The analysis window and the linear map onto `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSpec {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub censored: bool,
    pub total: usize,
    pub discarded_low: usize,
    pub discarded_high: usize,
    pub retained_ratio: f64,
    pub q25: f64,
    pub q75: f64,
}

impl DomainSpec {
    /// A window with nothing discarded, e.g. for a stored model.
    pub fn uncensored(a: f64, b: f64, total: usize) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::DegenerateDomain(format!("window [{a}, {b}] is empty")));
        }
        Ok(Self {
            a,
            b,
            c: DEFAULT_CENSOR_C,
            censored: false,
            total,
            discarded_low: 0,
            discarded_high: 0,
            retained_ratio: 1.0,
            q25: f64::NAN,
            q75: f64::NAN,
        })
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    pub fn retained(&self) -> usize {
        self.total - self.discarded_low - self.discarded_high
    }

    pub fn to_unit(&self, v: f64) -> Result<f64> {
        if !(self.a..=self.b).contains(&v) {
            return Err(Error::OutOfDomain { value: v, lower: self.a, upper: self.b });
        }
        Ok(self.to_unit_unchecked(v).clamp(-1.0, 1.0))
    }

    pub(crate) fn to_unit_unchecked(self, v: f64) -> f64 {
        (2.0 * v - self.b - self.a) / (self.b - self.a)
    }

    pub fn from_unit(&self, x: f64) -> f64 {
        ((self.b - self.a) * x + self.a + self.b) / 2.0
    }

    /// The retained observations of `sorted`, i.e. those inside `[a, b]`.
    pub fn retained_slice<'s>(&self, sorted: &'s SortedSample) -> &'s [f64] {
        let v = sorted.values();
        let lo = v.partition_point(|&x| x < self.a);
        let hi = v.partition_point(|&x| x <= self.b);
        &v[lo..hi]
    }
}

fn count_outside(sorted: &SortedSample, a: f64, b: f64) -> (usize, usize) {
    let v = sorted.values();
    let low = v.partition_point(|&x| x < a);
    let high = v.len() - v.partition_point(|&x| x <= b);
    (low, high)
}

/// Picks the analysis window for a sample.
///
/// Explicit bounds always win and censor whatever falls outside them.
/// Otherwise each side is settled on its own: a quartile fence that some
/// observation crosses becomes a censor bound, else that side takes the
/// extension bound. Points exactly on `a` or `b` are retained.
pub fn resolve_window(
    sorted: &SortedSample,
    c: f64,
    user_bounds: Option<(f64, f64)>,
) -> Result<DomainSpec> {
    let n = sorted.len();
    let (q25, q75) = if n >= 2 {
        (quantile_empirical(sorted, 0.25)?, quantile_empirical(sorted, 0.75)?)
    } else {
        (sorted.min(), sorted.max())
    };
    let (a, b, censored_by_rule) = match user_bounds {
        Some((a, b)) => {
            if !(a < b) || !a.is_finite() || !b.is_finite() {
                return Err(Error::InvalidArgument(format!("bounds [{a}, {b}] do not form an interval")));
            }
            (a, b, false)
        }
        None => {
            let (fa, fb) = outlier_bounds(sorted, c)?;
            let (ea, eb) = extension_bounds(sorted)?;
            let (cut_low, cut_high) = (sorted.min() < fa, sorted.max() > fb);
            (if cut_low { fa } else { ea }, if cut_high { fb } else { eb }, cut_low || cut_high)
        }
    };
    let (discarded_low, discarded_high) = count_outside(sorted, a, b);
    let retained = n - discarded_low - discarded_high;
    if retained < MIN_RETAINED {
        return Err(Error::InsufficientData { retained, required: MIN_RETAINED });
    }
    let censored = censored_by_rule || discarded_low + discarded_high > 0;
    Ok(DomainSpec {
        a,
        b,
        c,
        censored,
        total: n,
        discarded_low,
        discarded_high,
        retained_ratio: retained as f64 / n as f64,
        q25,
        q75,
    })
}

/// Window for folded data: the lower bound is pinned to the symmetry line
/// unless explicit bounds are given.
pub fn resolve_folded_window(
    folded: &SortedSample,
    c: f64,
    center: f64,
    user_bounds: Option<(f64, f64)>,
) -> Result<DomainSpec> {
    if user_bounds.is_some() {
        return resolve_window(folded, c, user_bounds);
    }
    let mut spec = resolve_window(folded, c, None)?;
    spec.a = center;
    let (low, high) = count_outside(folded, spec.a, spec.b);
    spec.discarded_low = low;
    spec.discarded_high = high;
    let retained = spec.total - low - high;
    if retained < MIN_RETAINED {
        return Err(Error::InsufficientData { retained, required: MIN_RETAINED });
    }
    spec.censored = low + high > 0;
    spec.retained_ratio = retained as f64 / spec.total as f64;
    if !(spec.a < spec.b) {
        return Err(Error::DegenerateDomain(format!("folded data has no spread beyond {center}")));
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn sorted(v: &[f64]) -> SortedSample {
        SortedSample::from_values(v.to_vec()).unwrap()
    }

    #[test]
    fn sorting() {
        assert_eq!(sort_sample(&RawSample::new(vec![3.0, 1.0, 2.0]).unwrap()).unwrap().values(), &[1.0, 2.0, 3.0]);
        assert_eq!(sorted(&[5.0]).values(), &[5.0]);
        assert_eq!(sorted(&[2.0, 2.0, 1.0]).values(), &[1.0, 2.0, 2.0]);
    }

    #[test]
    fn sorting_leaves_raw_untouched() {
        let raw = RawSample::new(vec![3.0, 1.0, 2.0]).unwrap();
        let _ = sort_sample(&raw).unwrap();
        assert_eq!(raw.values(), &[3.0, 1.0, 2.0]);
    }

    #[test]
    fn non_finite_reports_index() {
        let raw = RawSample::new(vec![1.0, f64::NAN, 2.0]).unwrap();
        match sort_sample(&raw) {
            Err(Error::NonFinite { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(RawSample::new(vec![]), Err(Error::EmptySample)));
    }

    #[test]
    fn extension_rule() {
        let s = sorted(&(0..10).map(f64::from).collect::<Vec<_>>());
        assert_eq!(extension_bounds(&s).unwrap(), (-4.0, 13.0));
        let s = sorted(&[0.0, 0.0, 0.0, 0.0, 0.0, 10.0]);
        assert_eq!(extension_bounds(&s).unwrap(), (0.0, 20.0));
        let s = sorted(&[5.0; 8]);
        assert!(matches!(extension_bounds(&s), Err(Error::DegenerateDomain(_))));
    }

    #[test]
    fn extension_rule_small_sample_fallback() {
        let s = sorted(&[1.0, 2.0, 4.0]);
        assert_eq!(extension_bounds(&s).unwrap(), (-2.0, 7.0));
    }

    #[test]
    fn quartile_fences() {
        // Q25 = 0, Q75 = 1 for this sample
        let s = sorted(&[-1.0, 0.0, 0.5, 1.0, 2.0]);
        assert_eq!(quantile_empirical(&s, 0.25).unwrap(), 0.0);
        assert_eq!(quantile_empirical(&s, 0.75).unwrap(), 1.0);
        assert_eq!(outlier_bounds(&s, 7.0).unwrap(), (-7.0, 8.0));
        // Q25 = -1, Q75 = 1
        let s = sorted(&[-3.0, -1.0, 0.0, 1.0, 3.0]);
        assert_eq!(outlier_bounds(&s, 3.0).unwrap(), (-7.0, 7.0));
        let s = sorted(&[0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 2.0]);
        assert!(matches!(outlier_bounds(&s, 7.0), Err(Error::DegenerateDomain(_))));
    }

    #[test]
    fn quantile_interpolation() {
        assert_eq!(quantile_empirical(&sorted(&[1.0, 2.0, 3.0, 4.0]), 0.5).unwrap(), 2.5);
        assert_eq!(quantile_empirical(&sorted(&[10.0, 20.0]), 0.25).unwrap(), 12.5);
        assert_eq!(quantile_empirical(&sorted(&[4.0, -2.0, 9.0]), 0.0).unwrap(), -2.0);
        assert_eq!(quantile_empirical(&sorted(&[4.0, -2.0, 9.0]), 1.0).unwrap(), 9.0);
        assert!(quantile_empirical(&sorted(&[1.0]), 1.5).is_err());
    }

    #[test]
    fn window_without_outliers_uses_extension() {
        let s = sorted(&(0..10).map(f64::from).collect::<Vec<_>>());
        let d = resolve_window(&s, 7.0, None).unwrap();
        assert_eq!((d.a, d.b), (-4.0, 13.0));
        assert!(!d.censored);
        assert_eq!(d.retained_ratio, 1.0);
    }

    #[test]
    fn window_censors_extreme_point() {
        let mut v: Vec<f64> = (0..40).map(f64::from).collect();
        let s0 = sorted(&v);
        let q75 = quantile_empirical(&s0, 0.75).unwrap();
        let iqr = q75 - quantile_empirical(&s0, 0.25).unwrap();
        // adding one point barely moves the quartiles; 10 IQR is far past the c = 7 fence
        v.push(q75 + 10.0 * iqr);
        let s = sorted(&v);
        let d = resolve_window(&s, 7.0, None).unwrap();
        assert!(d.censored);
        assert_eq!(d.discarded_high, 1);
        assert_eq!(d.discarded_low, 0);
        assert_relative_eq!(d.retained_ratio, 40.0 / 41.0);
        assert_eq!(d.retained_slice(&s).len(), 40);
        // nothing crosses the lower fence, so that side keeps the extension bound
        assert_relative_eq!(d.a, -4.0);
        assert_relative_eq!(d.b, quantile_empirical(&s, 0.75).unwrap() + 7.0 * iqr_of(&s));
    }

    fn iqr_of(s: &SortedSample) -> f64 {
        quantile_empirical(s, 0.75).unwrap() - quantile_empirical(s, 0.25).unwrap()
    }

    #[test]
    fn user_bounds_keep_everything_inside() {
        let s = sorted(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]);
        let d = resolve_window(&s, 7.0, Some((0.0, 1.0))).unwrap();
        assert!(!d.censored);
        assert_eq!(d.retained_ratio, 1.0);
        let d = resolve_window(&s, 7.0, Some((0.15, 1.0))).unwrap();
        assert!(d.censored);
        assert_eq!(d.discarded_low, 1);
    }

    #[test]
    fn window_edges_are_closed() {
        let s = sorted(&[0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 1.0]);
        let d = resolve_window(&s, 7.0, Some((0.0, 1.0))).unwrap();
        assert_eq!(d.retained(), 7);
    }

    #[test]
    fn window_needs_six_points() {
        let s = sorted(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]);
        assert!(matches!(
            resolve_window(&s, 7.0, Some((0.25, 1.0))),
            Err(Error::InsufficientData { retained: 5, .. })
        ));
    }

    #[test]
    fn unit_map() {
        let d = DomainSpec::uncensored(0.0, 2.0, 10).unwrap();
        assert_eq!(d.to_unit(1.0).unwrap(), 0.0);
        assert_eq!(d.to_unit(2.0).unwrap(), 1.0);
        assert_eq!(d.to_unit(0.0).unwrap(), -1.0);
        assert_eq!(d.to_unit(0.5).unwrap(), -0.5);
        assert!(d.to_unit(2.5).is_err());
    }

    #[test]
    fn folding() {
        let f = fold_symmetric(&sorted(&[-2.0, -1.0, 3.0]), SymmetryOption::about(0.0));
        assert_eq!(f.values(), &[1.0, 2.0, 3.0]);
        let f = fold_symmetric(&sorted(&[0.0, 2.0]), SymmetryOption::about(1.0));
        assert_eq!(f.values(), &[2.0, 2.0]);
        let s = sorted(&[1.0, 2.0, 5.0]);
        assert_eq!(fold_symmetric(&s, SymmetryOption::about(0.5)), s);
    }

    #[test]
    fn folded_window_starts_at_center() {
        let v: Vec<f64> = (1..=20).map(|k| k as f64 * 0.1).collect();
        let d = resolve_folded_window(&sorted(&v), 7.0, 0.0, None).unwrap();
        assert_eq!(d.a, 0.0);
        assert!(d.b > 2.0);
    }

    proptest! {
        #[test]
        fn unit_map_round_trip(a in -1e3f64..1e3, w in 1e-3f64..1e3, x in -1.0f64..=1.0) {
            let d = DomainSpec::uncensored(a, a + w, 1).unwrap();
            let back = d.to_unit_unchecked(d.from_unit(x));
            prop_assert!((back - x).abs() <= 1e-12 * (1.0 + x.abs()) * (1.0 + a.abs() / w));
        }

        #[test]
        fn discard_bookkeeping(v in proptest::collection::vec(-50.0f64..50.0, 8..60), lo in -60.0f64..0.0, hi in 0.0f64..60.0) {
            let s = SortedSample::from_values(v).unwrap();
            if let Ok(d) = resolve_window(&s, 7.0, Some((lo, hi))) {
                let kept = (d.retained_ratio * d.total as f64).round() as usize;
                prop_assert_eq!(kept + d.discarded_low + d.discarded_high, d.total);
            }
        }

        #[test]
        fn extension_strictly_contains(v in proptest::collection::vec(-10.0f64..10.0, 8..60)) {
            let s = SortedSample::from_values(v).unwrap();
            if let Ok(d) = resolve_window(&s, 7.0, None) {
                if !d.censored {
                    prop_assert!(d.a < s.min() || s.min() == s.values()[4]);
                    prop_assert!(d.b > s.max() || s.max() == s.values()[s.len() - 6]);
                    prop_assert!(d.a <= s.min() && d.b >= s.max());
                }
            }
        }

        #[test]
        fn fences_equivariant(v in proptest::collection::vec(-10.0f64..10.0, 8..40), alpha in 0.1f64..10.0, beta in -5.0f64..5.0) {
            let s = SortedSample::from_values(v.clone()).unwrap();
            let t = SortedSample::from_values(v.iter().map(|x| alpha * x + beta).collect()).unwrap();
            if let (Ok((a, b)), Ok((ta, tb))) = (outlier_bounds(&s, 7.0), outlier_bounds(&t, 7.0)) {
                let tol = 1e-9 * (1.0 + a.abs().max(b.abs())) * alpha.max(1.0);
                prop_assert!((alpha * a + beta - ta).abs() < tol);
                prop_assert!((alpha * b + beta - tb).abs() < tol);
            }
        }
    }
}
