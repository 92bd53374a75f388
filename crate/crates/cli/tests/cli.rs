use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn maxent(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxent")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn fixture() -> String {
    concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/uniform_4096.txt").to_string()
}

fn data_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split('\t').map(|f| f.parse().unwrap()).collect())
        .collect()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn fit_uniform_fixture() {
    let dir = scratch("fit_uniform");
    let out = dir.join("run");
    let o = maxent(&["fit", "--input", &fixture(), "--out", p(&out), "--seed", "11", "--svg"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["model.txt", "curves.tsv", "sqr.tsv", "spread.tsv", "diagnostics.txt", "run_log.tsv", "pdf.svg", "sqr.svg"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let rows = data_rows(&out.join("curves.tsv"));
    assert_eq!(rows.len(), 1001);
    let (lo, hi) = (rows[0][0], rows[1000][0]);
    let (c0, c1) = (lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo));
    for r in rows.iter().filter(|r| (c0..=c1).contains(&r[0])) {
        assert!((r[1] - 0.5).abs() < 0.05, "pdf({}) = {}", r[0], r[1]);
    }
    let cdf_end = rows[1000][2];
    assert!((cdf_end - 1.0).abs() < 1e-6);
    let diag = fs::read_to_string(out.join("diagnostics.txt")).unwrap();
    for key in ["p-value\tNA", "KL distance\tNA", "Figure of Merit", "SURD coverage", "Lagrange Multipliers"] {
        assert!(diag.contains(key), "{key}");
    }
    assert!(fs::read_to_string(out.join("pdf.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn missing_input_is_io_error_without_output() {
    let dir = scratch("missing");
    let out = dir.join("run");
    let o = maxent(&["fit", "--input", p(&dir.join("absent.txt")), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!out.exists());
}

#[test]
fn existing_outputs_need_force() {
    let dir = scratch("force");
    let out = dir.join("run");
    let args = ["fit", "--input", &fixture(), "--out", p(&out), "--solutions", "2"];
    assert!(maxent(&args).status.success());
    let before = fs::read(out.join("model.txt")).unwrap();
    fs::write(out.join("model.txt"), "keep me").unwrap();
    let o = maxent(&args);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(fs::read_to_string(out.join("model.txt")).unwrap(), "keep me");
    let mut forced = args.to_vec();
    forced.push("--force");
    assert!(maxent(&forced).status.success());
    assert_eq!(fs::read(out.join("model.txt")).unwrap(), before);
}

#[test]
fn single_solution_skips_spread() {
    let dir = scratch("single");
    let out = dir.join("run");
    let o = maxent(&["fit", "--input", &fixture(), "--out", p(&out), "--solutions", "1"]);
    assert!(o.status.success());
    assert!(!out.join("spread.tsv").exists());
    assert!(String::from_utf8_lossy(&o.stderr).contains("spread.tsv not written"));
}

#[test]
fn identical_seeds_give_identical_records() {
    let dir = scratch("determinism");
    let (a, b) = (dir.join("a"), dir.join("b"));
    for d in [&a, &b] {
        assert!(maxent(&["fit", "--input", &fixture(), "--out", p(d), "--seed", "5"]).status.success());
    }
    assert_eq!(fs::read(a.join("model.txt")).unwrap(), fs::read(b.join("model.txt")).unwrap());
}

#[test]
fn degenerate_sample_exit_code() {
    let dir = scratch("degenerate");
    let input = dir.join("flat.txt");
    fs::write(&input, "2\n".repeat(50)).unwrap();
    let o = maxent(&["fit", "--input", p(&input), "--out", p(&dir.join("run"))]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn usage_errors() {
    let dir = scratch("usage");
    assert_eq!(maxent(&["fit"]).status.code(), Some(2));
    let o = maxent(&["sample", "--dist", "zipf", "--n", "5", "--out", p(&dir.join("z.txt"))]);
    assert_eq!(o.status.code(), Some(2));
    let o = maxent(&["calibrate", "--out", p(&dir.join("c.txt")), "--trials", "500"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("at least 1000"));
    assert!(!dir.join("c.txt").exists());
}

#[test]
fn sample_is_deterministic() {
    let dir = scratch("sample");
    let (a, b) = (dir.join("a.txt"), dir.join("b.txt"));
    for f in [&a, &b] {
        assert!(maxent(&["sample", "--dist", "uniform", "--n", "256", "--seed", "1", "--out", p(f)]).status.success());
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 256);
}

#[test]
fn sqr_of_stored_model_matches_fit() {
    let dir = scratch("sqr");
    let out = dir.join("run");
    assert!(maxent(&["fit", "--input", &fixture(), "--out", p(&out), "--solutions", "2"]).status.success());
    let sqr = dir.join("sqr.tsv");
    let o = maxent(&["sqr", "--model", p(&out.join("model.txt")), "--input", &fixture(), "--out", p(&sqr)]);
    assert!(o.status.success());
    let again = data_rows(&sqr);
    assert_eq!(again, data_rows(&out.join("sqr.tsv")));
    let max = again.iter().map(|r| r[1].abs()).fold(0.0, f64::max);
    assert!((0.2..3.0).contains(&max), "max |delta| = {max}");
    let o = maxent(&["sqr", "--model", p(&dir.join("none.txt")), "--input", &fixture(), "--out", p(&dir.join("x.tsv"))]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn bench_row_count() {
    let dir = scratch("bench");
    let o = maxent(&["bench", "--out", p(&dir), "--dists", "uniform,laplace", "--sizes", "256,4096", "--solutions", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(dir.join("bench.tsv")).unwrap();
    let lines: Vec<&str> = table.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(lines[0].starts_with("distribution\tSample Size\tsample\tseed\tp-value\tKL distance"));
    assert_eq!(lines.len() - 1, 16);
    let timing = fs::read_to_string(dir.join("timing.tsv")).unwrap();
    assert_eq!(timing.lines().filter(|l| !l.starts_with('#')).count(), 1 + 4);
}

#[test]
fn calibrate_small_run() {
    let dir = scratch("calibrate");
    let path = dir.join("cal.txt");
    let o = maxent(&["calibrate", "--out", p(&path), "--sizes", "256,1024", "--trials", "1000"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.contains("size 1024 trials 1000"));
    let input = fixture();
    let out = dir.join("run");
    let o = maxent(&["fit", "--input", &input, "--out", p(&out), "--calibration", p(&path), "--solutions", "1"]);
    assert!(o.status.success());
    assert!(fs::read_to_string(out.join("model.txt")).unwrap().contains("cal.txt"));
}
