//! Plain-text formats: sample input, model records, tables and reports.
//!
//! Every float is written with 17 significant digits so values survive a
//! round trip exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::bench::BenchmarkRow;
use crate::diagnostics::DiagnosticsReport;
use crate::domain::{DomainSpec, SymmetryOption};
use crate::error::{Error, Result};
use crate::model::{LagrangeVector, MaxEntModel};
use crate::optimizer::{AttemptStatus, ProgressEvent, SolutionAttempt};
use crate::scoring::ScoreReport;

pub const MODEL_FORMAT: u32 = 1;

/// Formats with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Reads one value per line from the first whitespace- or comma-separated
/// field. Blank lines and `#` comments are skipped; a first line that is not
/// a number is taken as a header.
pub fn parse_sample(text: &str) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    let mut seen_data_line = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let field = line.split(|c: char| c == ',' || c == ';' || c.is_whitespace()).next().unwrap_or("");
        match field.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if !seen_data_line => {}
            Err(_) => return Err(Error::Parse { line: i + 1, message: format!("not a number: {field:?}") }),
        }
        seen_data_line = true;
    }
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(values)
}

pub fn read_sample(path: &Path) -> Result<Vec<f64>> {
    parse_sample(&std::fs::read_to_string(path)?)
}

/// Tab-separated columns with a header line.
pub fn columns_tsv(headers: &[&str], columns: &[&[f64]]) -> String {
    let mut s = headers.join("\t");
    s.push('\n');
    let rows = columns.iter().map(|c| c.len()).min().unwrap_or(0);
    for r in 0..rows {
        let line: Vec<String> = columns.iter().map(|c| fmt_f64(c[r])).collect();
        s.push_str(&line.join("\t"));
        s.push('\n');
    }
    s
}

/// A stored model with the score it reached.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelRecord {
    pub model: MaxEntModel,
    pub report: Option<ScoreReport>,
    pub status: Option<AttemptStatus>,
    /// Free-form `key value` lines describing how the model was produced.
    pub provenance: Vec<(String, String)>,
}

impl ModelRecord {
    pub fn from_attempt(a: &SolutionAttempt, provenance: Vec<(String, String)>) -> Self {
        Self { model: a.model.clone(), report: Some(a.report), status: Some(a.status), provenance }
    }

    pub fn to_text(&self) -> String {
        let m = &self.model;
        let d = &m.domain;
        let mut s = String::new();
        writeln!(s, "# maxent model record").unwrap();
        writeln!(s, "format {MODEL_FORMAT}").unwrap();
        for (k, v) in &self.provenance {
            writeln!(s, "meta {k} {v}").unwrap();
        }
        writeln!(s, "window {} {}", fmt_f64(d.a), fmt_f64(d.b)).unwrap();
        writeln!(s, "censor_c {}", fmt_f64(d.c)).unwrap();
        writeln!(s, "censored {}", d.censored).unwrap();
        writeln!(s, "counts {} {} {}", d.total, d.discarded_low, d.discarded_high).unwrap();
        writeln!(s, "retained_ratio {}", fmt_f64(d.retained_ratio)).unwrap();
        writeln!(s, "quartiles {} {}", fmt_f64(d.q25), fmt_f64(d.q75)).unwrap();
        if m.symmetry.enabled {
            writeln!(s, "symmetry {}", fmt_f64(m.symmetry.center)).unwrap();
        } else {
            writeln!(s, "symmetry none").unwrap();
        }
        writeln!(s, "epsilon {}", fmt_f64(m.epsilon)).unwrap();
        writeln!(s, "log_norm {}", fmt_f64(m.log_norm)).unwrap();
        writeln!(s, "multipliers {}", m.multipliers_reported()).unwrap();
        for (j, l) in m.lagrange.as_slice().iter().enumerate() {
            writeln!(s, "lambda {} {}", j + 1, fmt_f64(*l)).unwrap();
        }
        if let Some(r) = &self.report {
            writeln!(
                s,
                "score {} {} {} {} {}",
                fmt_f64(r.raw_loglike),
                fmt_f64(r.penalty),
                fmt_f64(r.effective),
                fmt_f64(r.coverage),
                fmt_f64(r.raw_coverage)
            )
            .unwrap();
        }
        if let Some(st) = self.status {
            writeln!(s, "status {}", st.as_str()).unwrap();
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut fields: Vec<(usize, Vec<&str>)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            fields.push((i + 1, line.split_whitespace().collect()));
        }
        let perr = |line: usize, message: String| Error::Parse { line, message };
        let num = |line: usize, t: &str| t.parse::<f64>().map_err(|e| perr(line, format!("{t:?}: {e}")));
        let int = |line: usize, t: &str| t.parse::<usize>().map_err(|e| perr(line, format!("{t:?}: {e}")));

        let mut format = None;
        let mut provenance = Vec::new();
        let (mut a, mut b, mut c) = (None, None, crate::domain::DEFAULT_CENSOR_C);
        let mut censored = false;
        let mut counts = (0, 0, 0);
        let mut ratio = 1.0;
        let (mut q25, mut q75) = (f64::NAN, f64::NAN);
        let mut symmetry = SymmetryOption::NONE;
        let mut epsilon = crate::model::DEFAULT_EPSILON;
        let mut log_norm = None;
        let mut lambdas: Vec<f64> = Vec::new();
        let mut report = None;
        let mut status = None;
        for (ln, f) in &fields {
            let ln = *ln;
            match f.as_slice() {
                ["format", v] => format = Some(int(ln, v)?),
                ["meta", k, rest @ ..] => provenance.push((k.to_string(), rest.join(" "))),
                ["window", x, y] => {
                    a = Some(num(ln, x)?);
                    b = Some(num(ln, y)?);
                }
                ["censor_c", v] => c = num(ln, v)?,
                ["censored", v] => censored = *v == "true",
                ["counts", t, lo, hi] => counts = (int(ln, t)?, int(ln, lo)?, int(ln, hi)?),
                ["retained_ratio", v] => ratio = num(ln, v)?,
                ["quartiles", x, y] => {
                    q25 = num(ln, x)?;
                    q75 = num(ln, y)?;
                }
                ["symmetry", "none"] => symmetry = SymmetryOption::NONE,
                ["symmetry", v] => symmetry = SymmetryOption::about(num(ln, v)?),
                ["epsilon", v] => epsilon = num(ln, v)?,
                ["log_norm", v] => log_norm = Some(num(ln, v)?),
                ["multipliers", _] => {}
                ["lambda", j, v] => {
                    if int(ln, j)? != lambdas.len() + 1 {
                        return Err(perr(ln, "lambda indices must run 1, 2, ...".into()));
                    }
                    lambdas.push(num(ln, v)?);
                }
                ["score", r, p, e, cov, rc] => {
                    report = Some(ScoreReport {
                        raw_loglike: num(ln, r)?,
                        penalty: num(ln, p)?,
                        effective: num(ln, e)?,
                        coverage: num(ln, cov)?,
                        raw_coverage: num(ln, rc)?,
                    })
                }
                ["status", v] => {
                    status = Some(match *v {
                        "success" => AttemptStatus::Success,
                        "floor-success" => AttemptStatus::FloorSuccess,
                        "failure" => AttemptStatus::Failure,
                        other => return Err(perr(ln, format!("unknown status {other:?}"))),
                    })
                }
                _ => return Err(perr(ln, format!("unrecognised line {:?}", f.join(" ")))),
            }
        }
        if format != Some(MODEL_FORMAT as usize) {
            return Err(perr(0, format!("unsupported or missing format tag {format:?}")));
        }
        let (a, b) = match (a, b) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(perr(0, "missing window".into())),
        };
        let log_norm = log_norm.ok_or_else(|| perr(0, "missing log_norm".into()))?;
        let mut domain = DomainSpec::uncensored(a, b, counts.0)?;
        domain.c = c;
        domain.censored = censored;
        domain.discarded_low = counts.1;
        domain.discarded_high = counts.2;
        domain.retained_ratio = ratio;
        domain.q25 = q25;
        domain.q75 = q75;
        let model = MaxEntModel { lagrange: LagrangeVector::new(lambdas), log_norm, domain, symmetry, epsilon };
        Ok(Self { model, report, status, provenance })
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), fmt_f64)
}

/// `key<TAB>value` lines using the benchmark table column names.
pub fn diagnostics_text(r: &DiagnosticsReport) -> String {
    let mut s = String::new();
    writeln!(s, "p-value\t{}", opt(r.ks.map(|k| k.p_value))).unwrap();
    writeln!(s, "KS statistic\t{}", opt(r.ks.map(|k| k.statistic))).unwrap();
    writeln!(s, "KL distance\t{}", opt(r.kl)).unwrap();
    writeln!(s, "Figure of Merit\t{}", fmt_f64(r.fom)).unwrap();
    writeln!(s, "SURD coverage\t{}", fmt_f64(r.surd_coverage)).unwrap();
    writeln!(s, "Lagrange Multipliers\t{}", r.multipliers_reported).unwrap();
    s
}

pub const BENCH_HEADER: &str =
    "distribution\tSample Size\tsample\tseed\tp-value\tKL distance\tFigure of Merit\tSURD coverage\tLagrange Multipliers\tms\terror";

pub fn benchmark_tsv(rows: &[BenchmarkRow]) -> String {
    let mut s = String::from(BENCH_HEADER);
    s.push('\n');
    for r in rows {
        let (p, kl, fom, cov, mult) = match &r.report {
            Some(d) => (
                opt(d.ks.map(|k| k.p_value)),
                opt(d.kl),
                fmt_f64(d.fom),
                fmt_f64(d.surd_coverage),
                d.multipliers_reported.to_string(),
            ),
            None => ("NA".into(), "NA".into(), "NA".into(), "NA".into(), "NA".into()),
        };
        writeln!(
            s,
            "{}\t{}\t{}\t{}\t{p}\t{kl}\t{fom}\t{cov}\t{mult}\t{:.3}\t{}",
            r.distribution,
            r.n,
            r.sample_index,
            r.seed,
            r.wall_time.as_secs_f64() * 1e3,
            r.error.as_deref().unwrap_or("").replace(['\t', '\n'], " ")
        )
        .unwrap();
    }
    s
}

pub fn timing_tsv(summary: &[(String, usize, f64)]) -> String {
    let mut s = String::from("distribution\tN\tmean_ms\n");
    for (d, n, ms) in summary {
        writeln!(s, "{d}\t{n}\t{ms:.3}").unwrap();
    }
    s
}

pub fn run_log_tsv(attempts: &[SolutionAttempt]) -> String {
    let mut s = String::from("attempt\tlevel\tdim\tsigma\tbest_score\tcoverage\n");
    for a in attempts {
        for ProgressEvent { attempt, level, dim, sigma, best_score, coverage } in &a.log {
            writeln!(
                s,
                "{attempt}\t{level}\t{dim}\t{}\t{}\t{}",
                fmt_f64(*sigma),
                fmt_f64(*best_score),
                fmt_f64(*coverage)
            )
            .unwrap();
        }
    }
    s
}

/// One line per attempt: status, trials, dimension and score.
pub fn attempts_tsv(attempts: &[SolutionAttempt]) -> String {
    let mut s = String::from("attempt\tstatus\tstop\ttrials\tmultipliers\teffective_score\tcoverage\n");
    for a in attempts {
        writeln!(
            s,
            "{}\t{}\t{:?}\t{}\t{}\t{}\t{}",
            a.index,
            a.status.as_str(),
            a.stop_reason,
            a.trials,
            a.model.multipliers_reported(),
            fmt_f64(a.report.effective),
            fmt_f64(a.report.coverage)
        )
        .unwrap();
    }
    s
}
