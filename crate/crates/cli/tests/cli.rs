use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use reconsense::channel::AvgSnr;
use reconsense::detector;
use reconsense::fusion::{self, FusionParams};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_reconsense"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scenario(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, format!("schema = 1\n{body}")).unwrap();
    p.to_str().unwrap().to_string()
}

/// `key = value` lines of a report.
fn value(report: &str, key: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("{key} missing from\n{report}"))
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap()
}

struct Row {
    scheme: String,
    snr_db: f64,
    pmd_analytic: Option<f64>,
    pmd_mc: Option<f64>,
}

fn rows(csv_text: &str) -> Vec<Row> {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    let opt = |s: &str| (!s.is_empty()).then(|| s.parse::<f64>().unwrap());
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            Row {
                scheme: rec[0].to_string(),
                snr_db: rec[1].parse().unwrap(),
                pmd_analytic: opt(&rec[3]),
                pmd_mc: opt(&rec[6]),
            }
        })
        .collect()
}

fn curves(csv_text: &str) -> BTreeMap<String, Vec<Row>> {
    let mut out: BTreeMap<String, Vec<Row>> = BTreeMap::new();
    for row in rows(csv_text) {
        out.entry(row.scheme.clone()).or_default().push(row);
    }
    out
}

#[test]
fn calibrate_single_sample() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario(dir.path(), "a.toml", "scheme = \"noncoop\"\nsamples = 1\n");
    let out = stdout(&run(&["calibrate", "--scenario", &s]));
    assert!((value(&out, "lambda") - 5.99146).abs() < 1e-5);
    assert!(out.contains(": ok"));
}

#[test]
fn calibrate_or_rule_local_level() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario(
        dir.path(),
        "a.toml",
        "scheme = \"coop\"\nusers = 10\nvotes = 1\nsamples = 10\n",
    );
    let out = stdout(&run(&["calibrate", "--scenario", &s]));
    assert!((value(&out, "local_pf") - 0.005_116_2).abs() < 1e-7);
}

#[test]
fn calibrate_long_window_against_bisection() {
    // P(Y > λ) for Y ~ χ²(200) is a Poisson tail at λ/2
    let tail = |x: f64| {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..100 {
            term *= x / k as f64;
            sum += term;
        }
        (-x).exp() * sum
    };
    let (mut lo, mut hi) = (0.0, 400.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) > 0.05 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let s = scenario(dir.path(), "a.toml", "scheme = \"noncoop\"\nsamples = 100\n");
    let out = stdout(&run(&["calibrate", "--scenario", &s]));
    assert!((value(&out, "lambda") / (lo + hi) - 1.0).abs() < 1e-9);
}

#[test]
fn calibrate_every_preset() {
    for which in ["fig1", "fig2", "fig3"] {
        let out = stdout(&run(&["calibrate", "--which", which]));
        assert!(!out.contains("MISMATCH"), "{out}");
    }
}

#[test]
fn figure_curve_counts() {
    for (which, n) in [("fig1", 6), ("fig2", 4), ("fig3", 6)] {
        let out = stdout(&run(&["figure", "--which", which, "--mode", "analytic"]));
        assert!(out.starts_with("scheme,snr_db,pf_analytic,pmd_analytic,pf_mc,pf_ci,pmd_mc,pmd_ci,trials,seed\n"));
        let c = curves(&out);
        assert_eq!(c.len(), n, "{which}");
        assert!(c.values().all(|rows| rows.len() == 41));
    }
}

#[test]
fn figure_writes_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("fig2.csv");
    let o = run(&[
        "figure",
        "--which",
        "fig2",
        "--mode",
        "analytic",
        "--out",
        p.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert_eq!(curves(&std::fs::read_to_string(p).unwrap()).len(), 4);
}

#[test]
fn reduced_selection_beats_cooperation() {
    let out = stdout(&run(&["figure", "--which", "fig3", "--mode", "analytic"]));
    let c = curves(&out);
    let coop = &c["coop_N10_n1_M10"];
    for sel in ["selection_Q10_M35", "selection_Q10_M33"] {
        for (a, b) in c[sel].iter().zip(coop) {
            assert_eq!(a.snr_db, b.snr_db);
            assert!(
                a.pmd_analytic.unwrap() < b.pmd_analytic.unwrap(),
                "{sel} at {} dB",
                a.snr_db
            );
        }
    }
}

#[test]
fn sweep_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario(
        dir.path(),
        "s.toml",
        "scheme = \"switching\"\nstates = 4\nsamples = 20\nstart_db = -4\nstop_db = 4\nstep_db = 2\ntrials = 20000\nseed = 9\n",
    );
    let a = stdout(&run(&["sweep", "--scenario", &s]));
    let b = stdout(&run(&["sweep", "--scenario", &s]));
    assert_eq!(a, b);
    assert_eq!(rows(&a).len(), 5);
    assert!(rows(&a).iter().all(|r| r.pmd_mc.is_some() && r.pmd_analytic.is_some()));
    let c = stdout(&run(&["sweep", "--scenario", &s, "--seed", "10"]));
    assert_ne!(a, c);
}

#[test]
fn flags_override_the_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let s = scenario(
        dir.path(),
        "s.toml",
        &format!(
            "scheme = \"noncoop\"\nsamples = 10\nstart_db = 0\nstop_db = 2\nmode = \"analytic\"\noutput = \"{}\"\n",
            out.display()
        ),
    );
    assert!(run(&["sweep", "--scenario", &s]).status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(rows(&text).iter().all(|r| r.pmd_mc.is_none()));
    let other = dir.path().join("y.csv");
    let o = run(&[
        "sweep",
        "--scenario",
        &s,
        "--mode",
        "mc",
        "--trials",
        "2000",
        "--max-trials",
        "0",
        "--out",
        other.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&other).unwrap();
    let mut r = csv::Reader::from_reader(text.as_bytes());
    for rec in r.records() {
        let rec = rec.unwrap();
        assert!(rec[3].is_empty() && !rec[6].is_empty());
        assert_eq!(&rec[8], "2000");
    }
}

#[test]
fn analytic_columns_are_recomputable() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario(
        dir.path(),
        "s.toml",
        "scheme = \"coop\"\nusers = 3\nvotes = 2\nsamples = 8\nalpha = 0.1\nmode = \"analytic\"\n",
    );
    let out = stdout(&run(&["sweep", "--scenario", &s]));
    let f = FusionParams::calibrated(3, 2, 8, 0.1).unwrap();
    for r in rows(&out) {
        let want = fusion::global_pmd(&f, AvgSnr::from_db(r.snr_db).unwrap()).unwrap();
        assert_eq!(r.pmd_analytic.unwrap(), want);
    }
    let s = scenario(
        dir.path(),
        "n.toml",
        "scheme = \"noncoop\"\nsamples = 10\nmode = \"analytic\"\n",
    );
    let out = stdout(&run(&["sweep", "--scenario", &s]));
    let lambda = detector::calibrate_lambda(10, 0.05).unwrap();
    for r in rows(&out) {
        let want = detector::avg_pmd_numeric(10, lambda, AvgSnr::from_db(r.snr_db).unwrap()).unwrap();
        assert_eq!(r.pmd_analytic.unwrap(), want);
    }
}

#[test]
fn slope_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            "scheme = \"noncoop\"\nsamples = 10\nstart_db = 30\nstop_db = 50\n",
            1.0,
            0.1,
        ),
        (
            "scheme = \"coop\"\nusers = 5\nsamples = 10\nstart_db = 30\nstop_db = 40\n",
            5.0,
            0.5,
        ),
        (
            "scheme = \"switching\"\nstates = 4\nsamples = 20\nstart_db = 40\nstop_db = 60\n",
            4.0,
            0.4,
        ),
    ];
    for (k, (body, d, tol)) in cases.into_iter().enumerate() {
        let s = scenario(
            dir.path(),
            &format!("{k}.toml"),
            &format!("{body}mode = \"analytic\"\nwindow_lo_db = -100\nwindow_hi_db = 100\n"),
        );
        let out = stdout(&run(&["slope", "--scenario", &s]));
        assert_eq!(value(&out, "analytic_diversity"), d);
        assert!((value(&out, "fitted_slope") - d).abs() <= tol, "{out}");
    }
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = [
        "scheme = \"coop\"\nsamples = 10\n",
        "scheme = \"noncoop\"\nsamples = 10\nalpha = 0\n",
        "scheme = \"noncoop\"\nsamples = 10\nstop_db = -30\n",
        "scheme = \"radar\"\nsamples = 10\n",
    ];
    for (k, body) in bad.iter().enumerate() {
        let s = scenario(dir.path(), &format!("{k}.toml"), body);
        assert_eq!(run(&["sweep", "--scenario", &s]).status.code(), Some(2), "{body}");
    }
    assert_eq!(
        run(&["sweep", "--scenario", "/nonexistent.toml"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["figure", "--which", "fig9"]).status.code(), Some(2));
    std::fs::write(
        dir.path().join("v2.toml"),
        "schema = 2\nscheme = \"noncoop\"\nsamples = 10\n",
    )
    .unwrap();
    let v2 = dir.path().join("v2.toml");
    assert_eq!(
        run(&["sweep", "--scenario", v2.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn too_few_slope_cells_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario(
        dir.path(),
        "s.toml",
        "scheme = \"noncoop\"\nsamples = 10\nstart_db = -20\nstop_db = -18\nmode = \"analytic\"\n",
    );
    let o = run(&["slope", "--scenario", &s]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}
