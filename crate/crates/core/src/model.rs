//! The exponential Chebyshev-series density
//! `p_e(x) = exp(Λ + Σ_j λ_j T_j(x))` on `[-1, 1]` and its transport back to
//! the original variable.

use crate::domain::{DomainSpec, SymmetryOption};
use crate::error::{Error, Result};
use crate::quadrature::{CdfTable, QuadratureGrid};

/// Lower clamp applied when the density is evaluated.
pub const DEFAULT_EPSILON: f64 = 1e-12;

/// Multipliers `λ_1..λ_D`; `D = 0` is the uniform model.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LagrangeVector(Vec<f64>);

impl LagrangeVector {
    pub fn new(lambdas: Vec<f64>) -> Self {
        Self(lambdas)
    }

    pub fn zeros(d: usize) -> Self {
        Self(vec![0.0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    /// Grows to dimension `d`, new multipliers start at zero.
    pub fn extend_to(&mut self, d: usize) {
        if d > self.0.len() {
            self.0.resize(d, 0.0);
        }
    }

    pub fn l1_norm(&self) -> f64 {
        self.0.iter().map(|l| l.abs()).sum()
    }
}

/// `T_1(x)..T_D(x)` by the three-term recurrence.
pub fn chebyshev_vector(d: usize, x: f64) -> Result<Vec<f64>> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::OutOfDomain { value: x, lower: -1.0, upper: 1.0 });
    }
    let mut out = Vec::with_capacity(d);
    let (mut prev, mut cur) = (1.0, x);
    for _ in 0..d {
        out.push(cur);
        let next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    Ok(out)
}

/// `Σ_j λ_j T_j(x)`.
#[inline]
pub fn series_sum(lambdas: &[f64], x: f64) -> f64 {
    let mut sum = 0.0;
    let (mut prev, mut cur) = (1.0, x);
    let two_x = 2.0 * x;
    for &l in lambdas {
        sum += l * cur;
        let next = two_x * cur - prev;
        prev = cur;
        cur = next;
    }
    sum
}

pub fn log_density_unnorm(lagrange: &LagrangeVector, x: f64) -> f64 {
    series_sum(lagrange.as_slice(), x)
}

/// Λ from already evaluated exponents at the grid edges. `exponents` is
/// overwritten with `exp(h - max h)`.
pub(crate) fn log_norm_from_exponents(exponents: &mut [f64], grid: &QuadratureGrid) -> Result<f64> {
    let peak = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !peak.is_finite() {
        return Err(Error::InvalidModel(format!("log-density peak {peak} is not finite")));
    }
    for h in exponents.iter_mut() {
        *h = (*h - peak).exp();
    }
    let mass = grid.integrate_values(exponents);
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::InvalidModel(format!("normalization integral {mass} is not positive")));
    }
    Ok(-(peak + mass.ln()))
}

/// Λ such that the model integrates to one on the grid.
pub fn normalize(lagrange: &LagrangeVector, grid: &QuadratureGrid) -> Result<f64> {
    let mut h: Vec<f64> = grid.edges().iter().map(|&x| series_sum(lagrange.as_slice(), x)).collect();
    log_norm_from_exponents(&mut h, grid)
}

/// A normalized model together with the window it lives in.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxEntModel {
    pub lagrange: LagrangeVector,
    pub log_norm: f64,
    pub domain: DomainSpec,
    pub symmetry: SymmetryOption,
    pub epsilon: f64,
}

impl MaxEntModel {
    pub fn new(
        lagrange: LagrangeVector,
        grid: &QuadratureGrid,
        domain: DomainSpec,
        symmetry: SymmetryOption,
    ) -> Result<Self> {
        let log_norm = normalize(&lagrange, grid)?;
        Ok(Self { lagrange, log_norm, domain, symmetry, epsilon: DEFAULT_EPSILON })
    }

    /// Model whose original variable is already `[-1, 1]`.
    pub fn on_unit(lagrange: LagrangeVector, grid: &QuadratureGrid) -> Result<Self> {
        let domain = DomainSpec::uncensored(-1.0, 1.0, 0)?;
        Self::new(lagrange, grid, domain, SymmetryOption::NONE)
    }

    pub fn dim(&self) -> usize {
        self.lagrange.dim()
    }

    /// Multiplier count including the normalization, `D + 1`.
    pub fn multipliers_reported(&self) -> usize {
        self.dim() + 1
    }

    pub fn log_density(&self, x: f64) -> f64 {
        self.log_norm + series_sum(self.lagrange.as_slice(), x)
    }

    pub(crate) fn density_unfloored(&self, x: f64) -> f64 {
        self.log_density(x).exp()
    }

    /// `p_e(x)` on `[-1, 1]`, never below `epsilon`.
    pub fn density(&self, x: f64) -> f64 {
        self.density_unfloored(x).max(self.epsilon)
    }

    /// Support of the density in original units.
    pub fn support(&self) -> (f64, f64) {
        if self.symmetry.enabled {
            let c = self.symmetry.center;
            (2.0 * c - self.domain.b, self.domain.b)
        } else {
            (self.domain.a, self.domain.b)
        }
    }

    fn window_pdf(&self, w: f64) -> f64 {
        let d = &self.domain;
        if !(d.a..=d.b).contains(&w) {
            return 0.0;
        }
        let x = d.to_unit_unchecked(w).clamp(-1.0, 1.0);
        d.retained_ratio * self.density(x) * 2.0 / d.width()
    }

    /// Density in original units. Integrates to the retained mass over the
    /// window and is zero outside it.
    pub fn original_pdf(&self, v: f64) -> f64 {
        if self.symmetry.enabled {
            let c = self.symmetry.center;
            self.window_pdf(c + (v - c).abs()) / 2.0
        } else {
            self.window_pdf(v)
        }
    }

    fn window_cdf(&self, table: &CdfTable, w: f64) -> f64 {
        let d = &self.domain;
        let low = d.discarded_low as f64 / d.total.max(1) as f64;
        if w < d.a {
            return low;
        }
        let x = d.to_unit_unchecked(w.min(d.b)).clamp(-1.0, 1.0);
        low + d.retained_ratio * table.cdf_eval(x).value
    }

    /// Cumulative distribution in original units, built from the model's
    /// cdf table. Censored mass below `a` appears as a jump at `a`.
    pub fn original_cdf(&self, table: &CdfTable, v: f64) -> f64 {
        if self.symmetry.enabled {
            let c = self.symmetry.center;
            let base = self.window_cdf(table, c);
            let w = c + (v - c).abs();
            let half = (self.window_cdf(table, w) - base) / 2.0;
            if v >= c {
                0.5 + half
            } else {
                0.5 - half
            }
        } else {
            self.window_cdf(table, v)
        }
    }
}

/// The model as a density over its original-unit support.
pub fn to_original_scale(model: &MaxEntModel) -> impl Fn(f64) -> f64 + '_ {
    move |v| model.original_pdf(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::simpson_integrate;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn chebyshev_values() {
        assert_eq!(chebyshev_vector(2, 0.5).unwrap(), vec![0.5, -0.5]);
        assert_eq!(chebyshev_vector(5, 1.0).unwrap(), vec![1.0; 5]);
        assert_eq!(chebyshev_vector(3, 0.0).unwrap(), vec![0.0, -1.0, 0.0]);
        assert!(chebyshev_vector(2, 1.5).is_err());
    }

    #[test]
    fn chebyshev_matches_trig_form() {
        for i in 0..=2000 {
            let x = -1.0 + i as f64 / 1000.0;
            let t = chebyshev_vector(64, x).unwrap();
            for (j, v) in t.iter().enumerate() {
                let exact = ((j + 1) as f64 * x.acos()).cos();
                assert!((v - exact).abs() < 1e-10, "j = {}, x = {x}", j + 1);
            }
        }
    }

    #[test]
    fn unnormalized_log_density() {
        assert_eq!(log_density_unnorm(&LagrangeVector::default(), 0.3), 0.0);
        assert_eq!(log_density_unnorm(&LagrangeVector::new(vec![0.5]), 1.0), 0.5);
        assert_eq!(log_density_unnorm(&LagrangeVector::new(vec![0.0, 1.0]), 0.0), -1.0);
    }

    #[test]
    fn normalization_closed_forms() {
        let grid = QuadratureGrid::uniform(200);
        let uniform = normalize(&LagrangeVector::default(), &grid).unwrap();
        assert_relative_eq!(uniform, -(2.0f64).ln(), epsilon = 1e-14);

        // ∫ e^{λx} dx = 2 sinh(λ) / λ
        let half = normalize(&LagrangeVector::new(vec![0.5]), &grid).unwrap();
        let exact = -(2.0 * 0.5f64.sinh() / 0.5).ln();
        assert_relative_eq!(half, exact, epsilon = 1e-9);
        assert!((half - (-0.734)).abs() < 1e-3);

        let steep = normalize(&LagrangeVector::new(vec![10.0]), &grid).unwrap();
        let exact = -((10.0f64.exp() - (-10.0f64).exp()) / 10.0).ln();
        assert!(steep.is_finite());
        assert_relative_eq!(steep, exact, epsilon = 1e-5);

        let huge = normalize(&LagrangeVector::new(vec![800.0]), &grid).unwrap();
        assert!(huge.is_finite());
    }

    #[test]
    fn density_values() {
        let grid = QuadratureGrid::uniform(200);
        let u = MaxEntModel::on_unit(LagrangeVector::default(), &grid).unwrap();
        assert_relative_eq!(u.density(0.7), 0.5, epsilon = 1e-14);
        let m = MaxEntModel::on_unit(LagrangeVector::new(vec![0.5]), &grid).unwrap();
        // exp(Λ) = 0.25 / sinh(0.5) = 0.47976...
        assert_relative_eq!(m.density(0.0), 0.25 / 0.5f64.sinh(), epsilon = 1e-9);
        let spike = MaxEntModel::on_unit(LagrangeVector::new(vec![0.0, 60.0]), &grid).unwrap();
        assert_eq!(spike.density(0.0), spike.epsilon);
    }

    #[test]
    fn self_consistent_normalization() {
        let grid = QuadratureGrid::uniform(301);
        let m = MaxEntModel::on_unit(LagrangeVector::new(vec![0.4, -1.3, 0.9]), &grid).unwrap();
        let mass = simpson_integrate(&grid, |x| m.density(x)).unwrap();
        assert!((mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn original_scale_uniform() {
        let grid = QuadratureGrid::uniform(101);
        let domain = DomainSpec::uncensored(0.0, 2.0, 100).unwrap();
        let m = MaxEntModel::new(LagrangeVector::default(), &grid, domain, SymmetryOption::NONE).unwrap();
        let p = to_original_scale(&m);
        assert_relative_eq!(p(0.3), 0.5, epsilon = 1e-14);
        assert_relative_eq!(p(1.9), 0.5, epsilon = 1e-14);
        assert_eq!(p(2.5), 0.0);
    }

    #[test]
    fn original_scale_retained_mass() {
        let grid = QuadratureGrid::uniform(101);
        let mut domain = DomainSpec::uncensored(0.0, 1.0, 100).unwrap();
        domain.censored = true;
        domain.discarded_high = 10;
        domain.retained_ratio = 0.9;
        let m = MaxEntModel::new(LagrangeVector::default(), &grid, domain, SymmetryOption::NONE).unwrap();
        assert_relative_eq!(m.original_pdf(0.4), 0.9, epsilon = 1e-14);
        let fine = QuadratureGrid::uniform_on(0.0, 1.0, 1001);
        assert_relative_eq!(simpson_integrate(&fine, |v| m.original_pdf(v)).unwrap(), 0.9, epsilon = 1e-12);
    }

    #[test]
    fn symmetric_unfolding() {
        let grid = QuadratureGrid::uniform(201);
        let domain = DomainSpec::uncensored(0.0, 3.0, 100).unwrap();
        let m = MaxEntModel::new(LagrangeVector::new(vec![-0.8, 0.2]), &grid, domain, SymmetryOption::about(0.0)).unwrap();
        let folded = MaxEntModel { symmetry: SymmetryOption::NONE, ..m.clone() };
        for v in [0.1, 0.7, 1.5, 2.9] {
            assert_eq!(m.original_pdf(v), m.original_pdf(-v));
            assert_relative_eq!(m.original_pdf(v), folded.original_pdf(v) / 2.0, epsilon = 1e-15);
        }
        assert_eq!(m.support(), (-3.0, 3.0));
        let whole = QuadratureGrid::uniform_on(-3.0, 3.0, 2001);
        let mass = simpson_integrate(&whole, |v| m.original_pdf(v)).unwrap();
        assert!((mass - 1.0).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn random_models_normalize(lambdas in proptest::collection::vec(-3.0f64..3.0, 0..=12)) {
            let grid = QuadratureGrid::uniform(220);
            let m = MaxEntModel::on_unit(LagrangeVector::new(lambdas), &grid).unwrap();
            let mass = simpson_integrate(&grid, |x| m.density(x)).unwrap();
            prop_assert!((mass - 1.0).abs() < 1e-8);
        }

        #[test]
        fn density_bounded_by_l1(lambdas in proptest::collection::vec(-3.0f64..3.0, 0..=12), x in -1.0f64..=1.0) {
            let grid = QuadratureGrid::uniform(220);
            let lv = LagrangeVector::new(lambdas);
            let l1 = lv.l1_norm();
            let m = MaxEntModel::on_unit(lv, &grid).unwrap();
            let p = m.density(x);
            prop_assert!(p >= (m.log_norm - l1).exp() * (1.0 - 1e-12));
            prop_assert!(p <= (m.log_norm + l1).exp() * (1.0 + 1e-12));
        }

        #[test]
        fn shifting_the_exponent_only_moves_log_norm(lambdas in proptest::collection::vec(-3.0f64..3.0, 1..=8), shift in -20.0f64..20.0) {
            let grid = QuadratureGrid::uniform(220);
            let lv = LagrangeVector::new(lambdas);
            let mut h: Vec<f64> = grid.edges().iter().map(|&x| log_density_unnorm(&lv, x)).collect();
            let base = log_norm_from_exponents(&mut h.clone(), &grid).unwrap();
            for v in h.iter_mut() {
                *v += shift;
            }
            let moved = log_norm_from_exponents(&mut h, &grid).unwrap();
            prop_assert!((moved - (base - shift)).abs() < 1e-12 * (1.0 + shift.abs()));
            for &x in &[-0.9, 0.0, 0.45] {
                let p0 = (base + log_density_unnorm(&lv, x)).exp();
                let p1 = (moved + shift + log_density_unnorm(&lv, x)).exp();
                prop_assert!((p0 - p1).abs() <= 1e-12 * p0.max(1.0));
            }
        }
    }
}
