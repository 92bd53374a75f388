use super::{
    partition_schedule, titrate, AttemptStatus, Level, OptimizerConfig, ProgressFn, SearchState, SolutionAttempt,
    StopReason, Workspace,
};
use crate::clock::Stopwatch;
use crate::domain::{
    fold_symmetric, resolve_folded_window, resolve_window, DomainSpec, RawSample, SortedSample, SymmetryOption,
    DEFAULT_CENSOR_C,
};
use crate::error::{Error, Result};
use crate::model::{LagrangeVector, MaxEntModel};
use crate::quadrature::{build_grid, cdf_table, CdfTable, GridConfig, QuadratureGrid};
use crate::rng;
use crate::scoring::{OrderStatTable, ScoreReport, ScoringCalibration};

/// Points of the common grid used to compare ensemble members.
pub const SELECTION_POINTS: usize = 1001;

/// How the analysis window is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainOptions {
    pub censor_c: f64,
    pub bounds: Option<(f64, f64)>,
    pub symmetry: SymmetryOption,
    pub grid: GridConfig,
}

impl Default for DomainOptions {
    fn default() -> Self {
        Self { censor_c: DEFAULT_CENSOR_C, bounds: None, symmetry: SymmetryOption::NONE, grid: GridConfig::default() }
    }
}

/// All attempts of one fit and the selected estimate.
#[derive(Debug, Clone)]
pub struct FitEnsemble {
    pub attempts: Vec<SolutionAttempt>,
    /// Indices into `attempts` of the accepted solutions, in attempt order.
    pub accepted: Vec<usize>,
    /// Position within `accepted` of the central model.
    pub central: usize,
    pub pairwise_sse: Vec<Vec<f64>>,
    pub domain: DomainSpec,
    pub symmetry: SymmetryOption,
    /// Integration grid of the full retained sample.
    pub grid: QuadratureGrid,
    /// Retained (and folded, if symmetric) data in original units, sorted.
    pub retained: Vec<f64>,
    /// The same data mapped onto `[-1, 1]`.
    pub unit_sample: Vec<f64>,
}

impl FitEnsemble {
    pub fn central_attempt(&self) -> &SolutionAttempt {
        &self.attempts[self.accepted[self.central]]
    }

    pub fn central_model(&self) -> &MaxEntModel {
        &self.central_attempt().model
    }

    pub fn accepted_attempts(&self) -> impl Iterator<Item = &SolutionAttempt> {
        self.accepted.iter().map(|&i| &self.attempts[i])
    }

    pub fn cdf_table(&self, model: &MaxEntModel) -> Result<CdfTable> {
        cdf_table(model, &self.grid)
    }

    /// The retained data mapped through `model`'s cdf onto `[0, 1]`.
    pub fn mapped_sample(&self, model: &MaxEntModel) -> Result<Vec<f64>> {
        let table = self.cdf_table(model)?;
        let mut u = Vec::new();
        table.map_sorted(&self.unit_sample, &mut u);
        Ok(u)
    }
}

fn selection_grid(domain: &DomainSpec, symmetry: SymmetryOption) -> (Vec<f64>, f64) {
    let (lo, hi) = if symmetry.enabled {
        (2.0 * symmetry.center - domain.b, domain.b)
    } else {
        (domain.a, domain.b)
    };
    let step = (hi - lo) / (SELECTION_POINTS - 1) as f64;
    ((0..SELECTION_POINTS).map(|k| lo + k as f64 * step).collect(), step)
}

fn pairwise_sse(densities: &[Vec<f64>], step: f64) -> Vec<Vec<f64>> {
    let k = densities.len();
    let mut m = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let sse: f64 = densities[i].iter().zip(&densities[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() * step;
            m[i][j] = sse;
            m[j][i] = sse;
        }
    }
    m
}

/// Index minimising the total squared difference to all other densities.
/// Ties go to the lowest index.
pub fn select_central(densities: &[Vec<f64>]) -> usize {
    let m = pairwise_sse(densities, 1.0);
    let mut best = 0;
    let mut best_sum = f64::INFINITY;
    for (i, row) in m.iter().enumerate() {
        let s: f64 = row.iter().sum();
        if s < best_sum {
            best = i;
            best_sum = s;
        }
    }
    best
}

/// Pointwise standard deviation of the other densities about the central
/// one. `None` for a single density.
pub fn model_spread(densities: &[Vec<f64>], central: usize) -> Option<Vec<f64>> {
    if densities.len() < 2 {
        return None;
    }
    let others = (densities.len() - 1) as f64;
    let c = &densities[central];
    Some(
        (0..c.len())
            .map(|x| {
                let ss: f64 = densities
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != central)
                    .map(|(_, d)| (d[x] - c[x]).powi(2))
                    .sum();
                (ss / others).sqrt()
            })
            .collect(),
    )
}

struct Prepared {
    domain: DomainSpec,
    symmetry: SymmetryOption,
    retained: Vec<f64>,
    unit: Vec<f64>,
}

fn prepare(sample: &RawSample, opts: &DomainOptions) -> Result<Prepared> {
    let sorted = SortedSample::from_values(sample.values().to_vec())?;
    let (data, domain) = if opts.symmetry.enabled {
        let folded = fold_symmetric(&sorted, opts.symmetry);
        let d = resolve_folded_window(&folded, opts.censor_c, opts.symmetry.center, opts.bounds)?;
        (folded, d)
    } else {
        let d = resolve_window(&sorted, opts.censor_c, opts.bounds)?;
        (sorted, d)
    };
    let retained = domain.retained_slice(&data).to_vec();
    let unit = retained.iter().map(|&v| domain.to_unit_unchecked(v).clamp(-1.0, 1.0)).collect();
    Ok(Prepared { domain, symmetry: opts.symmetry, retained, unit })
}

fn run_attempt(
    index: usize,
    levels: &[Level],
    final_grid: &QuadratureGrid,
    prep: &Prepared,
    cfg: &OptimizerConfig,
    progress: Option<ProgressFn>,
) -> Result<SolutionAttempt> {
    let watch = Stopwatch::start();
    let mut rng = rng::stream(cfg.seed, &[index as u64]);
    let mut ws = Workspace::default();
    let mut state = SearchState { attempt: index, trials: 0, history: Vec::new(), log: Vec::new(), progress };
    let mut lambda = LagrangeVector::zeros(0);
    let mut outcome = (ScoreReport::rejected(), StopReason::Stalled);
    for (li, level) in levels.iter().enumerate() {
        outcome = titrate(level, li, &mut lambda, cfg, &mut rng, &mut ws, &mut state);
    }
    let (report, stop_reason) = outcome;
    let status = if report.coverage >= cfg.target_coverage {
        AttemptStatus::Success
    } else if report.coverage >= cfg.floor_coverage {
        AttemptStatus::FloorSuccess
    } else {
        AttemptStatus::Failure
    };
    let model = MaxEntModel::new(lambda, final_grid, prep.domain, prep.symmetry)?;
    Ok(SolutionAttempt {
        index,
        model,
        report,
        status,
        stop_reason,
        dimension_history: state.history,
        trials: state.trials,
        wall_time: watch.elapsed(),
        log: state.log,
    })
}

fn run_batch(
    range: std::ops::Range<usize>,
    levels: &[Level],
    grid: &QuadratureGrid,
    prep: &Prepared,
    cfg: &OptimizerConfig,
    progress: Option<ProgressFn>,
) -> Result<Vec<SolutionAttempt>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        range.into_par_iter().map(|i| run_attempt(i, levels, grid, prep, cfg, progress)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        range.map(|i| run_attempt(i, levels, grid, prep, cfg, progress)).collect()
    }
}

pub fn fit(
    sample: &RawSample,
    opts: &DomainOptions,
    cfg: &OptimizerConfig,
    calibration: &ScoringCalibration,
) -> Result<FitEnsemble> {
    fit_with_progress(sample, opts, cfg, calibration, None)
}

/// Fits an ensemble of models to `sample` and selects the central one.
///
/// Every attempt has its own RNG stream derived from `cfg.seed` and its
/// index, so results do not depend on scheduling. Attempts run in batches
/// sized to the solutions still missing, and accepted solutions are taken in
/// attempt order.
pub fn fit_with_progress(
    sample: &RawSample,
    opts: &DomainOptions,
    cfg: &OptimizerConfig,
    calibration: &ScoringCalibration,
    progress: Option<ProgressFn>,
) -> Result<FitEnsemble> {
    cfg.validate()?;
    let prep = prepare(sample, opts)?;
    let n = prep.unit.len();
    let schedule = partition_schedule(n);
    let table = OrderStatTable::new(n);
    let mut levels = Vec::with_capacity(schedule.len());
    for idx in schedule.levels() {
        let x: Vec<f64> = idx.iter().map(|&i| prep.unit[i]).collect();
        let ranks = (idx.len() < n).then(|| idx.iter().map(|&i| i + 1).collect());
        let grid = build_grid(&x, &opts.grid)?;
        levels.push(Level { x, ranks, grid, table: &table, calibration });
    }
    let final_grid = levels.last().expect("schedule has a final level").grid.clone();

    let mut attempts: Vec<SolutionAttempt> = Vec::new();
    let mut accepted = Vec::new();
    while accepted.len() < cfg.solutions_wanted && attempts.len() < cfg.max_attempts {
        let start = attempts.len();
        let end = (start + cfg.solutions_wanted - accepted.len()).min(cfg.max_attempts);
        for a in run_batch(start..end, &levels, &final_grid, &prep, cfg, progress)? {
            if a.status.accepted() && accepted.len() < cfg.solutions_wanted {
                accepted.push(a.index);
            }
            attempts.push(a);
        }
    }
    if accepted.len() < cfg.solutions_wanted {
        return Err(Error::EnsembleIncomplete { accepted: accepted.len(), wanted: cfg.solutions_wanted, attempts });
    }

    let (xs, step) = selection_grid(&prep.domain, prep.symmetry);
    let densities: Vec<Vec<f64>> = accepted
        .iter()
        .map(|&i| xs.iter().map(|&v| attempts[i].model.original_pdf(v)).collect())
        .collect();
    let central = select_central(&densities);
    let pairwise_sse = pairwise_sse(&densities, step);
    Ok(FitEnsemble {
        attempts,
        accepted,
        central,
        pairwise_sse,
        domain: prep.domain,
        symmetry: prep.symmetry,
        grid: final_grid,
        retained: prep.retained,
        unit_sample: prep.unit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_selection() {
        let same = vec![vec![1.0, 2.0]; 5];
        assert_eq!(select_central(&same), 0);
        assert_eq!(select_central(&[vec![1.0]]), 0);
        assert_eq!(select_central(&[vec![1.0, 0.0], vec![0.0, 1.0]]), 0);
        let a = vec![0.0, 1.0, 4.0];
        let c = vec![2.0, 3.0, 0.0];
        let b: Vec<f64> = a.iter().zip(&c).map(|(x, y)| (x + y) / 2.0).collect();
        assert_eq!(select_central(&[a, b, c]), 1);
    }

    #[test]
    fn spread() {
        assert!(model_spread(&[vec![1.0]], 0).is_none());
        let s = model_spread(&[vec![1.0, 2.0], vec![0.9, 2.0], vec![1.1, 2.0]], 0).unwrap();
        assert!((s[0] - 0.1).abs() < 1e-12);
        assert_eq!(s[1], 0.0);
    }
}
