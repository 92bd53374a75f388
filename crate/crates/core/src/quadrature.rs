//! Data-adaptive integration grid, composite Simpson integration on unequal
//! intervals, and cdf / quantile tabulation of a model.
//!
//! The grid places one edge every `floor(N / (M - 1))` sorted observations so
//! each bin holds roughly the same number of points, then splits any bin wider
//! than `2 / (M - 1)`. Dense data therefore gets narrow bins.

use crate::error::{Error, Result};
use crate::model::MaxEntModel;

/// How the nominal bin count `M` follows the sample size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NominalRule {
    /// `M = floor(base + slope N)`, capped.
    Offset,
    /// `M = min(max(slope N, base), cap)`.
    Clamped,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub base_points: usize,
    pub slope: f64,
    pub cap: usize,
    pub rule: NominalRule,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { base_points: 200, slope: 0.005, cap: 1500, rule: NominalRule::Offset }
    }
}

pub fn nominal_bins(n: usize, cfg: &GridConfig) -> usize {
    let scaled = cfg.slope * n as f64;
    let m = match cfg.rule {
        NominalRule::Offset => (cfg.base_points as f64 + scaled).floor() as usize,
        NominalRule::Clamped => (scaled.floor() as usize).max(cfg.base_points),
    };
    m.min(cfg.cap).max(3)
}

/// Integration edges with precomputed composite Simpson weights.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    edges: Vec<f64>,
    nominal_m: usize,
    weights: Vec<f64>,
    /// Per interval: first node of its Simpson panel and the three node
    /// weights giving the integral over just that interval.
    partial: Vec<(usize, [f64; 3])>,
}

/// Weights of the quadratic through `(0, h0, h0 + h1)`, over `[0, h0]` and
/// over the whole panel.
fn panel_weights(h0: f64, h1: f64) -> ([f64; 3], [f64; 3]) {
    let s = h0 + h1;
    let left = [
        h0 * (2.0 * h0 + 3.0 * h1) / (6.0 * s),
        h0 * (h0 + 3.0 * h1) / (6.0 * h1),
        -h0 * h0 * h0 / (6.0 * h1 * s),
    ];
    let total = [
        s * (2.0 * h0 - h1) / (6.0 * h0),
        s * s * s / (6.0 * h0 * h1),
        s * (2.0 * h1 - h0) / (6.0 * h1),
    ];
    (left, total)
}

impl QuadratureGrid {
    /// Grid on arbitrary strictly increasing edges.
    pub fn from_edges(edges: Vec<f64>, nominal_m: usize) -> Result<Self> {
        if edges.len() < 3 {
            return Err(Error::InvalidArgument(format!("grid needs at least 3 edges, got {}", edges.len())));
        }
        if let Some(i) = edges.windows(2).position(|w| !(w[1] > w[0]) || !w[0].is_finite() || !w[1].is_finite()) {
            return Err(Error::InvalidArgument(format!("grid edges not strictly increasing at {i}")));
        }
        let n = edges.len();
        let mut weights = vec![0.0; n];
        let mut partial = Vec::with_capacity(n - 1);
        let mut j = 0;
        while j + 2 < n {
            let h0 = edges[j + 1] - edges[j];
            let h1 = edges[j + 2] - edges[j + 1];
            let (left, total) = panel_weights(h0, h1);
            for k in 0..3 {
                weights[j + k] += total[k];
            }
            partial.push((j, left));
            partial.push((j, [total[0] - left[0], total[1] - left[1], total[2] - left[2]]));
            j += 2;
        }
        if j + 1 < n {
            // odd trailing interval: right part of the quadratic through the last three edges
            let h0 = edges[j] - edges[j - 1];
            let h1 = edges[j + 1] - edges[j];
            let (left, total) = panel_weights(h0, h1);
            let right = [total[0] - left[0], total[1] - left[1], total[2] - left[2]];
            for k in 0..3 {
                weights[j - 1 + k] += right[k];
            }
            partial.push((j - 1, right));
        }
        Ok(Self { edges, nominal_m, weights, partial })
    }

    /// `m` equally spaced edges on `[-1, 1]`.
    pub fn uniform(m: usize) -> Self {
        Self::uniform_on(-1.0, 1.0, m)
    }

    pub fn uniform_on(lower: f64, upper: f64, m: usize) -> Self {
        let m = m.max(3);
        let step = (upper - lower) / (m - 1) as f64;
        let mut edges: Vec<f64> = (0..m).map(|k| lower + k as f64 * step).collect();
        edges[m - 1] = upper;
        Self::from_edges(edges, m).expect("uniform edges are increasing")
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn nominal_m(&self) -> usize {
        self.nominal_m
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn max_spacing(&self) -> f64 {
        self.edges.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Composite integral of values sampled at the edges.
    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.edges.len());
        self.weights.iter().zip(values).map(|(w, f)| w * f).sum()
    }

    /// Running integral at every edge; starts at zero.
    pub fn cumulative_values(&self, values: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.push(0.0);
        let mut acc = 0.0;
        for &(base, w) in &self.partial {
            acc += w[0] * values[base] + w[1] * values[base + 1] + w[2] * values[base + 2];
            out.push(acc);
        }
    }
}

/// Builds the adaptive grid from sorted data already mapped into `[-1, 1]`.
pub fn build_grid(sorted_x: &[f64], cfg: &GridConfig) -> Result<QuadratureGrid> {
    let n = sorted_x.len();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if sorted_x.iter().any(|x| !(-1.0..=1.0).contains(x)) {
        return Err(Error::InvalidArgument("grid data must lie in [-1, 1]".into()));
    }
    let m = nominal_bins(n, cfg);
    let stride = n / (m - 1);
    if stride == 0 {
        return Ok(QuadratureGrid::uniform(m));
    }
    let dx_max = 2.0 / (m - 1) as f64;

    let mut anchors = Vec::with_capacity(n / stride + 2);
    anchors.push(-1.0);
    for k in (stride..=n).step_by(stride) {
        let x = sorted_x[k - 1];
        if x > *anchors.last().unwrap() && x < 1.0 {
            anchors.push(x);
        }
    }
    anchors.push(1.0);

    let mut edges = Vec::with_capacity(anchors.len() + m);
    edges.push(-1.0);
    for w in anchors.windows(2) {
        let gap = w[1] - w[0];
        let pieces = (gap / dx_max).ceil().max(1.0) as usize;
        let step = gap / pieces as f64;
        for k in 1..pieces {
            edges.push(w[0] + k as f64 * step);
        }
        edges.push(w[1]);
    }
    QuadratureGrid::from_edges(edges, m)
}

pub fn simpson_integrate(grid: &QuadratureGrid, f: impl Fn(f64) -> f64) -> Result<f64> {
    let mut values = Vec::with_capacity(grid.len());
    for &x in grid.edges() {
        let y = f(x);
        if !y.is_finite() {
            return Err(Error::NonFiniteIntegrand { x });
        }
        values.push(y);
    }
    Ok(grid.integrate_values(&values))
}

/// Result of a table lookup; `clamped` is set when the input was outside the
/// table's range and got pulled to the nearest end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lookup {
    pub value: f64,
    pub clamped: bool,
}

/// Tabulated cdf: nondecreasing `us` at the grid edges with exact endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfTable {
    xs: Vec<f64>,
    us: Vec<f64>,
}

impl CdfTable {
    /// Normalizes running partial integrals into a cdf table.
    pub fn from_partials(xs: Vec<f64>, mut partials: Vec<f64>) -> Result<Self> {
        if let Some(i) = partials.windows(2).position(|w| !(w[1] >= w[0])) {
            return Err(Error::CdfInconsistency { index: i + 1 });
        }
        let first = partials[0];
        let total = partials[partials.len() - 1] - first;
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidModel(format!("cumulative mass {total} is not positive")));
        }
        for u in partials.iter_mut() {
            *u = (*u - first) / total;
        }
        let last = partials.len() - 1;
        partials[0] = 0.0;
        partials[last] = 1.0;
        Ok(Self { xs, us: partials })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn us(&self) -> &[f64] {
        &self.us
    }

    pub fn cdf_eval(&self, x: f64) -> Lookup {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return Lookup { value: 0.0, clamped: x < self.xs[0] };
        }
        if x >= self.xs[n - 1] {
            return Lookup { value: 1.0, clamped: x > self.xs[n - 1] };
        }
        let k = self.xs.partition_point(|&e| e <= x);
        Lookup { value: interp(self.xs[k - 1], self.xs[k], self.us[k - 1], self.us[k], x), clamped: false }
    }

    pub fn quantile_eval(&self, u: f64) -> Lookup {
        let n = self.us.len();
        let clamped = !(0.0..=1.0).contains(&u);
        let u = u.clamp(0.0, 1.0);
        let k = self.us.partition_point(|&v| v < u);
        if k == 0 {
            return Lookup { value: self.xs[0], clamped };
        }
        if k >= n {
            return Lookup { value: self.xs[n - 1], clamped };
        }
        if self.us[k] == u {
            return Lookup { value: self.xs[k], clamped };
        }
        Lookup { value: interp(self.us[k - 1], self.us[k], self.xs[k - 1], self.xs[k], u), clamped }
    }

    /// Maps sorted points through the cdf with a single forward sweep.
    pub fn map_sorted(&self, sorted_x: &[f64], out: &mut Vec<f64>) {
        map_sorted_through(&self.xs, &self.us, sorted_x, out);
    }
}

/// Piecewise-linear map of sorted points through tabulated `(xs, us)`.
pub(crate) fn map_sorted_through(xs: &[f64], us: &[f64], sorted_x: &[f64], out: &mut Vec<f64>) {
    out.clear();
    let n = xs.len();
    let mut k = 1;
    for &x in sorted_x {
        if x <= xs[0] {
            out.push(0.0);
            continue;
        }
        if x >= xs[n - 1] {
            out.push(1.0);
            continue;
        }
        while xs[k] <= x {
            k += 1;
        }
        out.push(interp(xs[k - 1], xs[k], us[k - 1], us[k], x).clamp(0.0, 1.0));
    }
}

#[inline]
fn interp(x0: f64, x1: f64, y0: f64, y1: f64, x: f64) -> f64 {
    let t = (x - x0) / (x1 - x0);
    y0 + t * (y1 - y0)
}

/// Cumulative integral of a normalized model at every grid edge.
pub fn cdf_table(model: &MaxEntModel, grid: &QuadratureGrid) -> Result<CdfTable> {
    let values: Vec<f64> = grid.edges().iter().map(|&x| model.density_unfloored(x)).collect();
    let mut partials = Vec::with_capacity(values.len());
    grid.cumulative_values(&values, &mut partials);
    CdfTable::from_partials(grid.edges().to_vec(), partials)
}
