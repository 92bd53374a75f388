mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use maxent_core::bench::{self, make_distribution, BenchmarkSettings, TestDistribution, ALL_DISTRIBUTIONS};
use maxent_core::diagnostics::{self, CURVE_POINTS};
use maxent_core::io::{self, columns_tsv, ModelRecord};
use maxent_core::scoring::{calibrate, MIN_CALIBRATION_TRIALS};
use maxent_core::{
    fit, DomainOptions, Error, GridConfig, OptimizerConfig, RawSample, ScoringCalibration, SolutionAttempt,
    SymmetryOption,
};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "maxent", version, about = "Maximum-entropy density estimation from a univariate sample")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate a density from a sample file.
    Fit(FitArgs),
    /// Build a SURD score calibration table.
    Calibrate(CalibrateArgs),
    /// Draw a sample from a benchmark distribution.
    Sample(SampleArgs),
    /// Fit repeated samples of benchmark distributions and tabulate metrics.
    Bench(BenchArgs),
    /// Recompute the SQR series of a stored model against a sample.
    Sqr(SqrArgs),
}

#[derive(Args)]
struct FitArgs {
    /// One value per line; a non-numeric first line is skipped.
    #[arg(long)]
    input: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Lower bound of the support; requires --max.
    #[arg(long, requires = "max", allow_hyphen_values = true)]
    min: Option<f64>,
    #[arg(long, requires = "min", allow_hyphen_values = true)]
    max: Option<f64>,
    /// Fold the data about this symmetry line.
    #[arg(long, value_name = "CENTER", allow_hyphen_values = true)]
    symmetric: Option<f64>,
    #[arg(long, default_value_t = 0.40)]
    coverage: f64,
    #[arg(long, default_value_t = 5)]
    solutions: usize,
    #[arg(long = "censor-c", default_value_t = 7.0)]
    censor_c: f64,
    /// Calibration table to use instead of the bundled one.
    #[arg(long)]
    calibration: Option<PathBuf>,
    /// Also render pdf and SQR plots as SVG.
    #[arg(long)]
    svg: bool,
    /// Overwrite existing output files.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Output calibration file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [256usize, 1024, 4096, 16384, 65536])]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct SampleArgs {
    /// e.g. uniform, laplace, gamma, two-gaussian, five-fingers:0.5, cauchy:0.5, discontinuous, normal
    #[arg(long)]
    dist: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Output directory for the table and timing summary.
    #[arg(long)]
    out: PathBuf,
    /// Distributions to run; all of them by default.
    #[arg(long, value_delimiter = ',')]
    dists: Vec<String>,
    #[arg(long, value_delimiter = ',', default_values_t = [256usize, 4096])]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 4)]
    samples: usize,
    #[arg(long, default_value_t = 5)]
    solutions: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Do not fold symmetric distributions.
    #[arg(long)]
    no_symmetry: bool,
    #[arg(long)]
    calibration: Option<PathBuf>,
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct SqrArgs {
    /// Model record written by `fit`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    /// Output TSV file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    svg: bool,
    #[arg(long)]
    force: bool,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidArgument(_) | Error::UnknownDistribution(_) => 2,
            Error::Io(_) | Error::Parse { .. } => 3,
            Error::EmptySample
            | Error::NonFinite { .. }
            | Error::DegenerateDomain(_)
            | Error::InsufficientData { .. } => 4,
            Error::EnsembleIncomplete { .. } => 5,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure { code: 3, message: format!("{}: {e}", path.display()) }
}

/// Files a command will write. Nothing is written until every target has
/// been checked, so a refused run leaves no partial output.
struct Outputs {
    files: Vec<(PathBuf, String)>,
    force: bool,
}

impl Outputs {
    fn new(force: bool) -> Self {
        Self { files: Vec::new(), force }
    }

    fn add(&mut self, path: PathBuf, contents: String) {
        self.files.push((path, contents));
    }

    fn check(paths: &[PathBuf], force: bool) -> Result<(), Failure> {
        if force {
            return Ok(());
        }
        for p in paths {
            if p.exists() {
                return Err(Failure {
                    code: 3,
                    message: format!("{} exists; pass --force to overwrite", p.display()),
                });
            }
        }
        Ok(())
    }

    fn write(self) -> Result<(), Failure> {
        let paths: Vec<PathBuf> = self.files.iter().map(|(p, _)| p.clone()).collect();
        Self::check(&paths, self.force)?;
        for (p, contents) in self.files {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
            }
            fs::write(&p, contents).map_err(|e| io_failure(&p, e))?;
        }
        Ok(())
    }
}

fn header(command: &str, meta: &[(String, String)]) -> String {
    let mut s = format!("# maxent {VERSION} {command}");
    for (k, v) in meta {
        s.push_str(&format!(" {k}={v}"));
    }
    s.push('\n');
    s
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| io_failure(path, e))
}

fn load_sample(path: &Path) -> Result<RawSample, Failure> {
    let values = io::parse_sample(&read_text(path)?).map_err(|e| match e {
        Error::Parse { line, message } => Failure { code: 3, message: format!("{}:{line}: {message}", path.display()) },
        other => other.into(),
    })?;
    Ok(RawSample::new(values)?)
}

fn load_calibration(path: Option<&Path>) -> Result<ScoringCalibration, Failure> {
    match path {
        Some(p) => Ok(ScoringCalibration::parse(&read_text(p)?)?),
        None => Ok(ScoringCalibration::bundled().clone()),
    }
}

fn optimizer_config(coverage: f64, solutions: usize, seed: u64) -> Result<OptimizerConfig, Failure> {
    if solutions == 0 {
        return Err(usage("--solutions must be at least 1"));
    }
    let base = OptimizerConfig::default();
    let cfg = OptimizerConfig {
        target_coverage: coverage,
        solutions_wanted: solutions,
        max_attempts: base.max_attempts.max(2 * solutions + 2),
        seed,
        ..base
    };
    cfg.validate()?;
    Ok(cfg)
}

fn best_attempt(attempts: &[SolutionAttempt]) -> Option<&SolutionAttempt> {
    attempts.iter().max_by(|a, b| a.report.effective.total_cmp(&b.report.effective))
}

fn cmd_fit(a: FitArgs) -> Result<(), Failure> {
    let sample = load_sample(&a.input)?;
    let calibration = load_calibration(a.calibration.as_deref())?;
    let cfg = optimizer_config(a.coverage, a.solutions, a.seed)?;
    let opts = DomainOptions {
        censor_c: a.censor_c,
        bounds: a.min.zip(a.max),
        symmetry: a.symmetric.map_or(SymmetryOption::NONE, SymmetryOption::about),
        grid: GridConfig::default(),
    };

    let mut meta: Vec<(String, String)> = vec![
        ("version".into(), VERSION.into()),
        ("seed".into(), a.seed.to_string()),
        ("input".into(), a.input.display().to_string()),
        ("coverage".into(), a.coverage.to_string()),
        ("solutions".into(), a.solutions.to_string()),
        ("censor_c".into(), a.censor_c.to_string()),
    ];
    if let Some((lo, hi)) = opts.bounds {
        meta.push(("bounds".into(), format!("{lo},{hi}")));
    }
    if let Some(c) = a.symmetric {
        meta.push(("symmetric".into(), c.to_string()));
    }
    meta.push((
        "calibration".into(),
        a.calibration.as_ref().map_or_else(|| "bundled".to_string(), |p| p.display().to_string()),
    ));

    let out = |name: &str| a.out.join(name);
    let mut names = vec!["model.txt", "attempts.tsv", "run_log.tsv"];
    names.extend(["curves.tsv", "sqr.tsv", "diagnostics.txt", "spread.tsv"]);
    if a.svg {
        names.extend(["pdf.svg", "sqr.svg"]);
    }
    Outputs::check(&names.iter().map(|n| out(n)).collect::<Vec<_>>(), a.force)?;

    let ens = match fit(&sample, &opts, &cfg, &calibration) {
        Ok(e) => e,
        Err(Error::EnsembleIncomplete { accepted, wanted, attempts }) => {
            let mut files = Outputs::new(a.force);
            let h = header("fit", &meta);
            files.add(out("attempts.tsv"), h.clone() + &io::attempts_tsv(&attempts));
            files.add(out("run_log.tsv"), h + &io::run_log_tsv(&attempts));
            if let Some(best) = best_attempt(&attempts) {
                let mut m = meta.clone();
                m.push(("attempt".into(), best.index.to_string()));
                files.add(out("model.txt"), ModelRecord::from_attempt(best, m).to_text());
            }
            files.write()?;
            return Err(Failure {
                code: 5,
                message: format!(
                    "ensemble incomplete: {accepted} of {wanted} solutions after {} attempts; partial results in {}",
                    attempts.len(),
                    a.out.display()
                ),
            });
        }
        Err(e) => return Err(e.into()),
    };

    let central = ens.central_attempt();
    let model = &central.model;
    let mut m = meta.clone();
    m.push(("attempt".into(), central.index.to_string()));
    let record = ModelRecord::from_attempt(central, m);
    let curves = diagnostics::curves(&ens, model, CURVE_POINTS)?;
    let sqr = diagnostics::ensemble_sqr(&ens, model)?;
    let report = diagnostics::diagnose(&ens, model, central.report.coverage, None, a.seed)?;

    let h = header("fit", &meta);
    let mut files = Outputs::new(a.force);
    files.add(out("model.txt"), record.to_text());
    files.add(out("attempts.tsv"), h.clone() + &io::attempts_tsv(&ens.attempts));
    files.add(out("run_log.tsv"), h.clone() + &io::run_log_tsv(&ens.attempts));
    files.add(out("curves.tsv"), h.clone() + &columns_tsv(&["v", "pdf", "cdf"], &[&curves.v, &curves.pdf, &curves.cdf]));
    files.add(out("sqr.tsv"), h.clone() + &columns_tsv(&["mu", "delta"], &[&sqr.mu, &sqr.delta]));
    files.add(out("diagnostics.txt"), h.clone() + &io::diagnostics_text(&report));
    match diagnostics::ensemble_spread(&ens, CURVE_POINTS) {
        Some((v, pdf, spread)) => {
            files.add(out("spread.tsv"), h.clone() + &columns_tsv(&["v", "pdf", "spread"], &[&v, &pdf, &spread]))
        }
        None => eprintln!("only one accepted solution; spread.tsv not written"),
    }
    if a.svg {
        files.add(out("pdf.svg"), svg::line_plot("density estimate", &curves.v, &curves.pdf, "v", "p(v)"));
        files.add(out("sqr.svg"), svg::scatter_plot("scaled residual quantiles", &sqr.mu, &sqr.delta, "s/(N+1)", "delta"));
    }
    files.write()?;

    println!(
        "fit: {} accepted of {} attempts; central attempt {} with {} multipliers, coverage {:.3}, SQR max|delta| {:.3}",
        ens.accepted.len(),
        ens.attempts.len(),
        central.index,
        model.multipliers_reported(),
        central.report.coverage,
        sqr.max_abs()
    );
    Ok(())
}

fn cmd_calibrate(a: CalibrateArgs) -> Result<(), Failure> {
    if a.trials < MIN_CALIBRATION_TRIALS {
        return Err(usage(format!(
            "--trials {} is too few for stable quantiles; use at least {MIN_CALIBRATION_TRIALS} (10000 recommended)",
            a.trials
        )));
    }
    Outputs::check(std::slice::from_ref(&a.out), a.force)?;
    let (cal, reg) = calibrate(&a.sizes, a.trials, a.seed)?;
    let mut files = Outputs::new(a.force);
    files.add(a.out.clone(), cal.to_text());
    files.write()?;
    if let Some(r) = reg {
        println!("regression: slope {:.4}, intercept {:.4}", r.slope, r.intercept);
    }
    println!(
        "pooled mean {:.4}; 40% threshold {:.4}; 5% threshold {:.4}",
        cal.mean,
        cal.threshold(0.40),
        cal.threshold(0.05)
    );
    Ok(())
}

fn cmd_sample(a: SampleArgs) -> Result<(), Failure> {
    let dist = make_distribution(&a.dist)?;
    if a.n == 0 {
        return Err(usage("--n must be positive"));
    }
    let sample = dist.sample_seeded(a.n, a.seed)?;
    let mut s = header("sample", &[("dist".into(), dist.name()), ("n".into(), a.n.to_string()), ("seed".into(), a.seed.to_string())]);
    for v in sample.values() {
        s.push_str(&io::fmt_f64(*v));
        s.push('\n');
    }
    let mut files = Outputs::new(a.force);
    files.add(a.out, s);
    files.write()
}

fn cmd_bench(a: BenchArgs) -> Result<(), Failure> {
    let dists: Vec<TestDistribution> = if a.dists.is_empty() {
        ALL_DISTRIBUTIONS.to_vec()
    } else {
        a.dists.iter().map(|d| make_distribution(d)).collect::<Result<_, _>>()?
    };
    if a.sizes.is_empty() || a.samples == 0 {
        return Err(usage("need at least one size and one sample"));
    }
    let calibration = load_calibration(a.calibration.as_deref())?;
    let table_path = a.out.join("bench.tsv");
    let timing_path = a.out.join("timing.tsv");
    Outputs::check(&[table_path.clone(), timing_path.clone()], a.force)?;

    let settings = BenchmarkSettings {
        sizes: a.sizes.clone(),
        samples_per_size: a.samples,
        optimizer: optimizer_config(OptimizerConfig::default().target_coverage, a.solutions, a.seed)?,
        use_symmetry: !a.no_symmetry,
        seed: a.seed,
        ..BenchmarkSettings::default()
    };
    let mut rows = Vec::new();
    for d in &dists {
        for &n in &settings.sizes {
            for i in 0..settings.samples_per_size {
                let row = bench::run_row(d, n, i, &settings, &calibration);
                eprintln!(
                    "{} N={} sample {}: {}",
                    row.distribution,
                    n,
                    i,
                    row.error.as_deref().unwrap_or("ok")
                );
                rows.push(row);
            }
        }
    }
    let h = header("bench", &[("seed".into(), a.seed.to_string()), ("solutions".into(), a.solutions.to_string())]);
    let mut files = Outputs::new(a.force);
    files.add(table_path, h.clone() + &io::benchmark_tsv(&rows));
    files.add(timing_path, h + &io::timing_tsv(&bench::timing_summary(&rows)));
    files.write()?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    println!("bench: {} rows, {failed} failed fits", rows.len());
    Ok(())
}

fn cmd_sqr(a: SqrArgs) -> Result<(), Failure> {
    let record = ModelRecord::parse(&read_text(&a.model)?)?;
    let sample = load_sample(&a.input)?;
    let sqr = diagnostics::sample_sqr(&record.model, sample.values(), &GridConfig::default())?;
    let meta = [("model".into(), a.model.display().to_string()), ("input".into(), a.input.display().to_string())];
    let mut files = Outputs::new(a.force);
    files.add(a.out.clone(), header("sqr", &meta) + &columns_tsv(&["mu", "delta"], &[&sqr.mu, &sqr.delta]));
    if a.svg {
        files.add(
            a.out.with_extension("svg"),
            svg::scatter_plot("scaled residual quantiles", &sqr.mu, &sqr.delta, "s/(N+1)", "delta"),
        );
    }
    files.write()?;
    println!("sqr: {} points, max|delta| {:.4}", sqr.len(), sqr.max_abs());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Sqr(a) => cmd_sqr(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("maxent: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
