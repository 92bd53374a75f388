//! Funnel-diffusion random search over Lagrange multipliers.
//!
//! A walker takes Gaussian steps in λ-space and keeps a step only when the
//! penalised order-statistics score improves. After `max_failures` trials at
//! one step size the step shrinks by `decay_rate`; once it drops below
//! `min_sigma` the dimension grows (0, 1, 2, 3, 4, 5, 7, 9, ...). Large samples
//! are fitted on nested rank subsets of `2^n + 1` points first.

mod ensemble;

pub use ensemble::{fit, fit_with_progress, model_spread, select_central, DomainOptions, FitEnsemble, SELECTION_POINTS};

use std::time::Duration;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{series_sum, LagrangeVector, MaxEntModel};
use crate::quadrature::{map_sorted_through, QuadratureGrid};
use crate::scoring::{score_slices, OrderStatTable, ScoreReport, ScoringCalibration};

/// Search settings. Defaults follow the reference method.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub target_coverage: f64,
    pub floor_coverage: f64,
    pub initial_sigma: f64,
    pub decay_rate: f64,
    pub min_sigma: f64,
    pub max_failures: usize,
    pub max_multipliers: usize,
    /// Relative score gain per dimension addition below which the addition
    /// counts as stalled.
    pub stall_percent: f64,
    pub stall_additions: usize,
    pub solutions_wanted: usize,
    pub max_attempts: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            target_coverage: 0.40,
            floor_coverage: 0.05,
            initial_sigma: 0.1,
            decay_rate: std::f64::consts::FRAC_1_SQRT_2,
            min_sigma: 0.001,
            max_failures: 100,
            max_multipliers: 300,
            stall_percent: 0.01,
            stall_additions: 3,
            solutions_wanted: 5,
            max_attempts: 12,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(0.0 < self.floor_coverage && self.floor_coverage < self.target_coverage && self.target_coverage < 1.0) {
            return bad("coverages must satisfy 0 < floor < target < 1");
        }
        if !(0.0 < self.decay_rate && self.decay_rate < 1.0) {
            return bad("decay rate must lie in (0, 1)");
        }
        if !(0.0 < self.min_sigma && self.min_sigma < self.initial_sigma) {
            return bad("min_sigma must be positive and below initial_sigma");
        }
        if self.max_failures == 0 || self.solutions_wanted == 0 || self.max_multipliers == 0 {
            return bad("max_failures, solutions_wanted and max_multipliers must be positive");
        }
        if self.max_attempts < self.solutions_wanted {
            return bad("max_attempts must be at least solutions_wanted");
        }
        Ok(())
    }

    /// Number of step sizes tried per funnel, `ceil(log_f(min_sigma / sigma_0))`.
    pub fn sigma_stages(&self) -> usize {
        let mut sigma = self.initial_sigma;
        let mut stages = 0;
        while sigma >= self.min_sigma {
            stages += 1;
            sigma *= self.decay_rate;
        }
        stages
    }

    /// Dimensions visited from 1 up to the cap.
    pub fn dimension_stages(&self) -> usize {
        let mut d = 0;
        let mut stages = 0;
        while let Ok(next) = expand_dimension(d, self.max_multipliers) {
            d = next;
            stages += 1;
        }
        stages
    }

    /// Upper bound on trial steps of one attempt over `levels` partition levels.
    pub fn trial_bound(&self, levels: usize) -> usize {
        levels * self.dimension_stages() * self.sigma_stages() * self.max_failures
    }
}

/// Raised when growing the dimension would pass the multiplier cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DimensionCap;

/// Next dimension in the titration sequence 0, 1, 2, 3, 4, 5, 7, 9, ...
pub fn expand_dimension(d: usize, max_multipliers: usize) -> std::result::Result<usize, DimensionCap> {
    let next = if d < 5 { d + 1 } else { d + 2 };
    if next > max_multipliers {
        Err(DimensionCap)
    } else {
        Ok(next)
    }
}

/// Threshold above which samples are fitted hierarchically.
pub const BASE_PARTITION: usize = 1025;

/// Nested evenly spaced rank subsets; the last level is the whole sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSchedule {
    n: usize,
    levels: Vec<Vec<usize>>,
}

impl PartitionSchedule {
    pub fn sizes(&self) -> Vec<usize> {
        self.levels.iter().map(Vec::len).collect()
    }

    /// Zero-based sorted indices of each level.
    pub fn levels(&self) -> &[Vec<usize>] {
        &self.levels
    }

    pub fn full_n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

fn level_indices(n: usize, np: usize) -> Vec<usize> {
    if np == n {
        return (0..n).collect();
    }
    let (num, den) = ((n - 1) as u64, (np - 1) as u64);
    let mut idx: Vec<usize> = (0..np as u64).map(|s| ((2 * s * num + den) / (2 * den)) as usize).collect();
    idx.dedup();
    idx
}

pub fn partition_schedule(n: usize) -> PartitionSchedule {
    let mut sizes = Vec::new();
    if n > BASE_PARTITION {
        let mut p = 10;
        while (1usize << p) + 1 < n {
            sizes.push((1usize << p) + 1);
            p += 1;
        }
    }
    sizes.push(n);
    let levels = sizes.into_iter().map(|np| level_indices(n, np)).collect();
    PartitionSchedule { n, levels }
}

/// Emitted whenever the step size decays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProgressEvent {
    pub attempt: usize,
    pub level: usize,
    pub dim: usize,
    pub sigma: f64,
    pub best_score: f64,
    pub coverage: f64,
}

pub type ProgressFn<'a> = &'a (dyn Fn(&ProgressEvent) + Sync);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttemptStatus {
    Success,
    FloorSuccess,
    Failure,
}

impl AttemptStatus {
    pub fn accepted(self) -> bool {
        !matches!(self, AttemptStatus::Failure)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AttemptStatus::Success => "success",
            AttemptStatus::FloorSuccess => "floor-success",
            AttemptStatus::Failure => "failure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    TargetReached,
    DimensionCap,
    Stalled,
}

/// Best state reached at one dimension of one partition level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionStage {
    pub level: usize,
    pub level_size: usize,
    pub dim: usize,
    pub best_score: f64,
    pub coverage: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionAttempt {
    pub index: usize,
    pub model: MaxEntModel,
    /// Score of the final model on the full retained sample.
    pub report: ScoreReport,
    pub status: AttemptStatus,
    pub stop_reason: StopReason,
    pub dimension_history: Vec<DimensionStage>,
    pub trials: usize,
    pub wall_time: Duration,
    pub log: Vec<ProgressEvent>,
}

/// One partition level ready for scoring.
pub(crate) struct Level<'a> {
    pub x: Vec<f64>,
    pub ranks: Option<Vec<usize>>,
    pub grid: QuadratureGrid,
    pub table: &'a OrderStatTable,
    pub calibration: &'a ScoringCalibration,
}

#[derive(Default)]
pub(crate) struct Workspace {
    h: Vec<f64>,
    partials: Vec<f64>,
    u: Vec<f64>,
}

impl Level<'_> {
    /// Scores multipliers against this level's data; invalid models score as
    /// rejected.
    pub fn evaluate(&self, lambdas: &[f64], ws: &mut Workspace) -> ScoreReport {
        let edges = self.grid.edges();
        ws.h.clear();
        let mut peak = f64::NEG_INFINITY;
        for &x in edges {
            let v = series_sum(lambdas, x);
            peak = peak.max(v);
            ws.h.push(v);
        }
        if !peak.is_finite() {
            return ScoreReport::rejected();
        }
        for v in ws.h.iter_mut() {
            *v = (*v - peak).exp();
        }
        self.grid.cumulative_values(&ws.h, &mut ws.partials);
        let total = *ws.partials.last().unwrap();
        if !(total > 0.0 && total.is_finite()) || ws.partials.windows(2).any(|w| w[1] < w[0]) {
            return ScoreReport::rejected();
        }
        for p in ws.partials.iter_mut() {
            *p /= total;
        }
        let last = ws.partials.len() - 1;
        ws.partials[last] = 1.0;
        map_sorted_through(edges, &ws.partials, &self.x, &mut ws.u);
        score_slices(self.table, &ws.u, self.ranks.as_deref(), self.calibration)
    }
}

pub(crate) struct SearchState<'p> {
    pub attempt: usize,
    pub trials: usize,
    pub history: Vec<DimensionStage>,
    pub log: Vec<ProgressEvent>,
    pub progress: Option<ProgressFn<'p>>,
}

impl SearchState<'_> {
    fn emit(&mut self, e: ProgressEvent) {
        if let Some(f) = self.progress {
            f(&e);
        }
        self.log.push(e);
    }
}

/// Funnel diffusion at a fixed dimension. Returns true once the target
/// coverage is reached; `best` always holds the score of `lambda`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn funnel_search<R: Rng + ?Sized>(
    level: &Level,
    level_index: usize,
    lambda: &mut LagrangeVector,
    best: &mut ScoreReport,
    cfg: &OptimizerConfig,
    rng: &mut R,
    ws: &mut Workspace,
    state: &mut SearchState,
) -> bool {
    let dim = lambda.dim();
    let mut trial = vec![0.0; dim];
    let mut sigma = cfg.initial_sigma;
    let mut count = 0;
    let start_trials = state.trials;
    let reached = loop {
        for (t, &l) in trial.iter_mut().zip(lambda.as_slice()) {
            let z: f64 = rng.sample(StandardNormal);
            *t = l + sigma * z;
        }
        let report = level.evaluate(&trial, ws);
        state.trials += 1;
        if report.effective > best.effective {
            lambda.as_mut_slice().copy_from_slice(&trial);
            *best = report;
        }
        if best.coverage >= cfg.target_coverage {
            break true;
        }
        count += 1;
        if count >= cfg.max_failures {
            count = 0;
            sigma *= cfg.decay_rate;
            state.emit(ProgressEvent {
                attempt: state.attempt,
                level: level_index,
                dim,
                sigma,
                best_score: best.effective,
                coverage: best.coverage,
            });
            if sigma < cfg.min_sigma {
                break false;
            }
        }
    };
    state.history.push(DimensionStage {
        level: level_index,
        level_size: level.x.len(),
        dim,
        best_score: best.effective,
        coverage: best.coverage,
        trials: state.trials - start_trials,
    });
    reached
}

fn stalled(previous: f64, current: f64, percent: f64) -> bool {
    if !previous.is_finite() {
        return !current.is_finite();
    }
    (current - previous) / previous.abs().max(f64::MIN_POSITIVE) < percent
}

/// Dimension titration on one level, starting from `lambda`.
pub(crate) fn titrate<R: Rng + ?Sized>(
    level: &Level,
    level_index: usize,
    lambda: &mut LagrangeVector,
    cfg: &OptimizerConfig,
    rng: &mut R,
    ws: &mut Workspace,
    state: &mut SearchState,
) -> (ScoreReport, StopReason) {
    let mut best = level.evaluate(lambda.as_slice(), ws);
    if best.coverage >= cfg.target_coverage {
        return (best, StopReason::TargetReached);
    }
    if lambda.dim() == 0 {
        match expand_dimension(0, cfg.max_multipliers) {
            Ok(d) => lambda.extend_to(d),
            Err(DimensionCap) => return (best, StopReason::DimensionCap),
        }
    }
    let mut stall_run = 0;
    loop {
        let before = best.effective;
        if funnel_search(level, level_index, lambda, &mut best, cfg, rng, ws, state) {
            return (best, StopReason::TargetReached);
        }
        if stalled(before, best.effective, cfg.stall_percent) {
            stall_run += 1;
            if stall_run >= cfg.stall_additions {
                return (best, StopReason::Stalled);
            }
        } else {
            stall_run = 0;
        }
        match expand_dimension(lambda.dim(), cfg.max_multipliers) {
            Ok(d) => lambda.extend_to(d),
            Err(DimensionCap) => return (best, StopReason::DimensionCap),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_sequence() {
        let mut d = 0;
        let mut seq = vec![d];
        for _ in 0..8 {
            d = expand_dimension(d, 300).unwrap();
            seq.push(d);
        }
        assert_eq!(seq, vec![0, 1, 2, 3, 4, 5, 7, 9, 11]);
        assert_eq!(expand_dimension(299, 300), Err(DimensionCap));
        assert_eq!(expand_dimension(4, 5), Ok(5));
    }

    #[test]
    fn schedule_sizes() {
        assert_eq!(partition_schedule(600).sizes(), vec![600]);
        assert_eq!(partition_schedule(1025).sizes(), vec![1025]);
        assert_eq!(partition_schedule(5000).sizes(), vec![1025, 2049, 4097, 5000]);
        assert_eq!(partition_schedule(4097).sizes(), vec![1025, 2049, 4097]);
        assert_eq!(partition_schedule(1).sizes(), vec![1]);
    }

    #[test]
    fn schedule_levels_nest() {
        for n in [1026, 3000, 5000, 70_000] {
            let s = partition_schedule(n);
            for w in s.levels().windows(2) {
                let outer: std::collections::HashSet<_> = w[1].iter().collect();
                assert!(w[0].iter().all(|i| outer.contains(i)), "n = {n}");
                assert!(w[0].windows(2).all(|p| p[0] < p[1]));
            }
            let first = &s.levels()[0];
            assert_eq!((first[0], *first.last().unwrap()), (0, n - 1));
            assert_eq!(s.levels().last().unwrap().len(), n);
        }
    }

    #[test]
    fn default_bounds() {
        let cfg = OptimizerConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.sigma_stages(), 14);
        assert_eq!(cfg.trial_bound(1), cfg.dimension_stages() * 14 * 100);
        let bad = OptimizerConfig { floor_coverage: 0.5, ..cfg };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn stall_rule() {
        assert!(stalled(-1.0, -0.995, 0.01));
        assert!(!stalled(-1.0, -0.98, 0.01));
        assert!(!stalled(f64::NEG_INFINITY, -3.0, 0.01));
        assert!(stalled(f64::NEG_INFINITY, f64::NEG_INFINITY, 0.01));
    }

    use crate::domain::RawSample;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest, ProptestConfig};
    use rand::SeedableRng;

    fn two_bumps(n: usize, gap: f64, seed: u64) -> RawSample {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let v = (0..n)
            .map(|k| {
                let z: f64 = r.sample(StandardNormal);
                z + if k % 3 == 0 { gap } else { 0.0 }
            })
            .collect();
        RawSample::new(v).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(6))]

        #[test]
        fn search_is_monotone_bounded_and_seeded(gap in 0.0f64..6.0, data_seed in 0u64..1000, seed in 0u64..1000) {
            let sample = two_bumps(300, gap, data_seed);
            let cfg = OptimizerConfig { max_failures: 15, solutions_wanted: 2, max_attempts: 2, seed, ..OptimizerConfig::default() };
            let cal = ScoringCalibration::bundled();
            let opts = DomainOptions::default();
            let run = || match fit(&sample, &opts, &cfg, cal) {
                Ok(e) => e.attempts,
                Err(Error::EnsembleIncomplete { attempts, .. }) => attempts,
                Err(e) => panic!("{e}"),
            };
            let first = run();
            for a in &first {
                prop_assert!(a.trials <= cfg.trial_bound(1));
                prop_assert!(a.log.windows(2).all(|w| w[1].best_score >= w[0].best_score));
                prop_assert!(a.dimension_history.windows(2).all(|w| w[1].best_score >= w[0].best_score));
            }
            let again = run();
            for (a, b) in first.iter().zip(&again) {
                prop_assert_eq!(&a.model, &b.model);
                prop_assert_eq!(a.report, b.report);
                prop_assert_eq!(a.trials, b.trials);
            }
        }

        #[test]
        fn partition_levels_nest(n in 1usize..40_000) {
            let s = partition_schedule(n);
            prop_assert_eq!(s.full_n(), n);
            for w in s.levels().windows(2) {
                let mut i = 0;
                for &x in &w[0] {
                    while i < w[1].len() && w[1][i] < x {
                        i += 1;
                    }
                    prop_assert!(i < w[1].len() && w[1][i] == x);
                }
            }
        }
    }
}
