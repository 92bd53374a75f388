//! Test distributions with exact pdf, cdf and quantile, and a harness that
//! fits samples drawn from them and scores the estimates against the truth.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use rand::distr::Open01;
use rand::Rng;
use statrs::function::erf::{erf, erf_inv, erfc, erfc_inv};

use crate::clock::Stopwatch;
use crate::diagnostics::{diagnose, DiagnosticsReport, Reference};
use crate::domain::{RawSample, SymmetryOption};
use crate::error::{Error, Result};
use crate::optimizer::{fit, DomainOptions, OptimizerConfig};
use crate::rng;
use crate::scoring::ScoringCalibration;

fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

fn norm_quantile(u: f64) -> f64 {
    if u < 0.5 {
        -SQRT_2 * erfc_inv(2.0 * u)
    } else {
        SQRT_2 * erfc_inv(2.0 * (1.0 - u))
    }
}

const FINGER_SIGMA: f64 = 0.01;

fn finger_center(k: usize) -> f64 {
    (2 * k - 1) as f64 / 10.0
}

/// Monotone bisection of `cdf(v) = u` on a bracket that is widened as needed.
fn invert_cdf(cdf: impl Fn(f64) -> f64, u: f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut step = (hi - lo).max(1.0);
    while cdf(lo) > u {
        lo -= step;
        step *= 2.0;
    }
    step = (hi - lo).max(1.0);
    while cdf(hi) < u {
        hi += step;
        step *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-12 * mid.abs().max(1.0) {
            break;
        }
        if cdf(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The benchmark distributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestDistribution {
    /// `1/2` on `[-1, 1]`.
    Uniform,
    /// `e^{-|v|} / 2`.
    Laplace,
    /// Gamma with shape `1/2`: `e^{-v} / sqrt(π v)` on `(0, ∞)`.
    Gamma,
    /// `0.7 N(5, 3) + 0.3 N(0, 1/2)`.
    TwoGaussian,
    /// Five narrow Gaussians of total weight `w` over a uniform on `[0, 1]`.
    FiveFingers { w: f64 },
    /// Cauchy with scale `b`.
    Cauchy { b: f64 },
    /// Piecewise constant on `[0, 1]`.
    Discontinuous,
    /// Standard normal.
    Normal,
}

pub const ALL_DISTRIBUTIONS: [TestDistribution; 9] = [
    TestDistribution::Uniform,
    TestDistribution::Laplace,
    TestDistribution::Gamma,
    TestDistribution::TwoGaussian,
    TestDistribution::FiveFingers { w: 0.5 },
    TestDistribution::FiveFingers { w: 0.2 },
    TestDistribution::Cauchy { b: 0.5 },
    TestDistribution::Discontinuous,
    TestDistribution::Normal,
];

impl TestDistribution {
    pub fn name(&self) -> String {
        match self {
            TestDistribution::Uniform => "uniform".into(),
            TestDistribution::Laplace => "laplace".into(),
            TestDistribution::Gamma => "gamma".into(),
            TestDistribution::TwoGaussian => "two-gaussian".into(),
            TestDistribution::FiveFingers { w } => format!("five-fingers:{w}"),
            TestDistribution::Cauchy { b } if *b == 0.5 => "cauchy".into(),
            TestDistribution::Cauchy { b } => format!("cauchy:{b}"),
            TestDistribution::Discontinuous => "discontinuous".into(),
            TestDistribution::Normal => "normal".into(),
        }
    }

    /// Symmetry line the benchmark harness uses by default.
    pub fn default_symmetry(&self) -> SymmetryOption {
        match self {
            TestDistribution::Laplace => SymmetryOption::about(0.0),
            _ => SymmetryOption::NONE,
        }
    }

    pub fn pdf(&self, v: f64) -> f64 {
        match *self {
            TestDistribution::Uniform => {
                if (-1.0..=1.0).contains(&v) {
                    0.5
                } else {
                    0.0
                }
            }
            TestDistribution::Laplace => 0.5 * (-v.abs()).exp(),
            TestDistribution::Gamma => {
                if v > 0.0 {
                    (-v).exp() / (PI * v).sqrt()
                } else {
                    0.0
                }
            }
            TestDistribution::TwoGaussian => 0.7 * norm_pdf((v - 5.0) / 3.0) / 3.0 + 0.3 * norm_pdf(v / 0.5) / 0.5,
            TestDistribution::FiveFingers { w } => {
                if !(0.0..=1.0).contains(&v) {
                    return 0.0;
                }
                let peaks: f64 = (1..=5).map(|k| norm_pdf((v - finger_center(k)) / FINGER_SIGMA) / FINGER_SIGMA).sum();
                w * peaks / 5.0 + (1.0 - w)
            }
            TestDistribution::Cauchy { b } => b / (PI * (v * v + b * b)),
            TestDistribution::Discontinuous => {
                if !(0.0..=1.0).contains(&v) {
                    0.0
                } else if !(0.3..=0.8).contains(&v) {
                    0.8
                } else if v > 0.4 && v < 0.5 {
                    1.0
                } else {
                    1.25
                }
            }
            TestDistribution::Normal => norm_pdf(v),
        }
    }

    pub fn cdf(&self, v: f64) -> f64 {
        match *self {
            TestDistribution::Uniform => ((v + 1.0) / 2.0).clamp(0.0, 1.0),
            TestDistribution::Laplace => {
                if v < 0.0 {
                    0.5 * v.exp()
                } else {
                    1.0 - 0.5 * (-v).exp()
                }
            }
            TestDistribution::Gamma => {
                if v > 0.0 {
                    erf(v.sqrt())
                } else {
                    0.0
                }
            }
            TestDistribution::TwoGaussian => 0.7 * norm_cdf((v - 5.0) / 3.0) + 0.3 * norm_cdf(v / 0.5),
            TestDistribution::FiveFingers { w } => {
                let v = v.clamp(0.0, 1.0);
                let peaks: f64 = (1..=5)
                    .map(|k| {
                        let mu = finger_center(k);
                        norm_cdf((v - mu) / FINGER_SIGMA) - norm_cdf(-mu / FINGER_SIGMA)
                    })
                    .sum();
                w * peaks / 5.0 + (1.0 - w) * v
            }
            TestDistribution::Cauchy { b } => 0.5 + (v / b).atan() / PI,
            TestDistribution::Discontinuous => {
                let v = v.clamp(0.0, 1.0);
                if v <= 0.3 {
                    0.8 * v
                } else if v <= 0.4 {
                    0.24 + 1.25 * (v - 0.3)
                } else if v <= 0.5 {
                    0.365 + (v - 0.4)
                } else if v <= 0.8 {
                    0.465 + 1.25 * (v - 0.5)
                } else {
                    0.84 + 0.8 * (v - 0.8)
                }
            }
            TestDistribution::Normal => norm_cdf(v),
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            TestDistribution::Uniform => 2.0 * u - 1.0,
            TestDistribution::Laplace => {
                if u < 0.5 {
                    (2.0 * u).ln()
                } else {
                    -(2.0 * (1.0 - u)).ln()
                }
            }
            TestDistribution::Gamma => {
                let r = if u < 0.5 { erf_inv(u) } else { erfc_inv(1.0 - u) };
                r * r
            }
            TestDistribution::TwoGaussian => invert_cdf(|v| self.cdf(v), u, -3.0, 14.0),
            TestDistribution::FiveFingers { .. } => invert_cdf(|v| self.cdf(v), u, 0.0, 1.0).clamp(0.0, 1.0),
            TestDistribution::Cauchy { b } => b * (PI * (u - 0.5)).tan(),
            TestDistribution::Discontinuous => {
                if u <= 0.24 {
                    u / 0.8
                } else if u <= 0.365 {
                    0.3 + (u - 0.24) / 1.25
                } else if u <= 0.465 {
                    0.4 + (u - 0.365)
                } else if u <= 0.84 {
                    0.5 + (u - 0.465) / 1.25
                } else {
                    0.8 + (u - 0.84) / 0.8
                }
            }
            TestDistribution::Normal => norm_quantile(u),
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            TestDistribution::Uniform => (-1.0, 1.0),
            TestDistribution::Gamma => (0.0, f64::INFINITY),
            TestDistribution::FiveFingers { .. } | TestDistribution::Discontinuous => (0.0, 1.0),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Inverse-transform sample of size `n`.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<RawSample> {
        let values = (0..n)
            .map(|_| {
                let u: f64 = rng.sample(Open01);
                self.quantile(u)
            })
            .collect();
        RawSample::new(values)
    }

    pub fn sample_seeded(&self, n: usize, seed: u64) -> Result<RawSample> {
        self.sample(n, &mut rng::stream(seed, &[name_tag(&self.name())]))
    }
}

impl Reference for TestDistribution {
    fn pdf(&self, v: f64) -> f64 {
        TestDistribution::pdf(self, v)
    }

    fn cdf(&self, v: f64) -> f64 {
        TestDistribution::cdf(self, v)
    }

    fn support(&self) -> (f64, f64) {
        TestDistribution::support(self)
    }
}

impl fmt::Display for TestDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

fn param(name: &str, p: Option<&str>, default: f64) -> Result<f64> {
    match p {
        None => Ok(default),
        Some(t) => t.parse().map_err(|_| Error::InvalidArgument(format!("bad parameter {t:?} for {name}"))),
    }
}

/// Parses names such as `uniform`, `five-fingers:0.2` or `cauchy:0.5`.
pub fn make_distribution(spec: &str) -> Result<TestDistribution> {
    let (name, p) = match spec.split_once(':') {
        Some((n, p)) => (n, Some(p)),
        None => (spec, None),
    };
    let plain = |d: TestDistribution| {
        if p.is_some() {
            Err(Error::InvalidArgument(format!("{name} takes no parameter")))
        } else {
            Ok(d)
        }
    };
    match name.to_ascii_lowercase().as_str() {
        "uniform" => plain(TestDistribution::Uniform),
        "laplace" => plain(TestDistribution::Laplace),
        "gamma" => plain(TestDistribution::Gamma),
        "two-gaussian" | "two-gaussians" => plain(TestDistribution::TwoGaussian),
        "discontinuous" => plain(TestDistribution::Discontinuous),
        "normal" | "gaussian" => plain(TestDistribution::Normal),
        "five-fingers" => {
            let w = param(name, p, 0.5)?;
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::InvalidArgument(format!("five-fingers weight {w} outside [0, 1]")));
            }
            Ok(TestDistribution::FiveFingers { w })
        }
        "cauchy" => {
            let b = param(name, p, 0.5)?;
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::InvalidArgument(format!("cauchy scale {b} must be positive")));
            }
            Ok(TestDistribution::Cauchy { b })
        }
        _ => Err(Error::UnknownDistribution(spec.to_string())),
    }
}

impl FromStr for TestDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        make_distribution(s)
    }
}

/// Stable 64-bit FNV-1a tag, so seeds follow the distribution name rather
/// than its position in a list.
pub fn name_tag(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

/// One fitted benchmark sample.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub distribution: String,
    pub n: usize,
    pub sample_index: usize,
    pub seed: u64,
    pub report: Option<DiagnosticsReport>,
    pub wall_time: Duration,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct BenchmarkSettings {
    pub sizes: Vec<usize>,
    pub samples_per_size: usize,
    pub optimizer: OptimizerConfig,
    pub domain: DomainOptions,
    /// Fold symmetric distributions about their centre.
    pub use_symmetry: bool,
    pub seed: u64,
}

impl Default for BenchmarkSettings {
    fn default() -> Self {
        Self {
            sizes: vec![1 << 8, 1 << 12],
            samples_per_size: 4,
            optimizer: OptimizerConfig::default(),
            domain: DomainOptions::default(),
            use_symmetry: true,
            seed: 0,
        }
    }
}

/// Seed of one benchmark sample.
pub fn row_seed(master: u64, dist: &TestDistribution, n: usize, sample_index: usize) -> u64 {
    rng::derive_seed(master, &[name_tag(&dist.name()), n as u64, sample_index as u64])
}

/// Draws, fits and diagnoses one sample.
pub fn run_row(
    dist: &TestDistribution,
    n: usize,
    sample_index: usize,
    settings: &BenchmarkSettings,
    calibration: &ScoringCalibration,
) -> BenchmarkRow {
    let seed = row_seed(settings.seed, dist, n, sample_index);
    let watch = Stopwatch::start();
    let result = (|| {
        let sample = dist.sample(n, &mut rng::stream(seed, &[0]))?;
        let mut opts = settings.domain;
        if settings.use_symmetry {
            opts.symmetry = dist.default_symmetry();
        }
        let cfg = OptimizerConfig { seed: rng::derive_seed(seed, &[1]), ..settings.optimizer.clone() };
        let ens = fit(&sample, &opts, &cfg, calibration)?;
        let central = ens.central_attempt();
        diagnose(&ens, &central.model, central.report.coverage, Some(dist), rng::derive_seed(seed, &[2]))
    })();
    let wall_time = watch.elapsed();
    let (report, error) = match result {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    BenchmarkRow { distribution: dist.name(), n, sample_index, seed, report, wall_time, error }
}

/// Runs every (distribution, size, sample) combination. Fit failures are
/// recorded in their row and the harness moves on.
pub fn run_benchmark(
    dists: &[TestDistribution],
    settings: &BenchmarkSettings,
    calibration: &ScoringCalibration,
) -> Vec<BenchmarkRow> {
    let mut rows = Vec::new();
    for d in dists {
        for &n in &settings.sizes {
            for i in 0..settings.samples_per_size {
                rows.push(run_row(d, n, i, settings, calibration));
            }
        }
    }
    rows
}

/// Mean wall time per (distribution, size), in input order.
pub fn timing_summary(rows: &[BenchmarkRow]) -> Vec<(String, usize, f64)> {
    let mut out: Vec<(String, usize, f64, usize)> = Vec::new();
    for r in rows {
        let ms = r.wall_time.as_secs_f64() * 1e3;
        match out.iter_mut().find(|(d, n, _, _)| *d == r.distribution && *n == r.n) {
            Some(e) => {
                e.2 += ms;
                e.3 += 1;
            }
            None => out.push((r.distribution.clone(), r.n, ms, 1)),
        }
    }
    out.into_iter().map(|(d, n, s, c)| (d, n, s / c as f64)).collect()
}
