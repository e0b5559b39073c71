use std::io::Write;

use reconsense::simkit::{McEstimate, SweepCurve};

use crate::CliError;

pub const HEADER: [&str; 10] = [
    "scheme",
    "snr_db",
    "pf_analytic",
    "pmd_analytic",
    "pf_mc",
    "pf_ci",
    "pmd_mc",
    "pmd_ci",
    "trials",
    "seed",
];

fn num(x: Option<f64>) -> String {
    // Display gives the shortest round-trip form, so output is reproducible
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// One row per (curve, grid point). Missing columns stay empty. `seed` is the
/// substream seed of the row's H₁ estimate, or the run seed without one.
pub fn write_csv<W: Write>(w: W, curves: &[(String, SweepCurve)], seed: u64) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Config(format!("writing CSV: {e}"));
    let mut out = csv::Writer::from_writer(w);
    out.write_record(HEADER).map_err(io)?;
    for (label, curve) in curves {
        for p in &curve.points {
            let pf: Option<McEstimate> = p.pf_mc;
            let pmd = p.pmd_mc;
            out.write_record([
                label.clone(),
                p.snr_db.to_string(),
                num(p.pf_analytic),
                num(p.pmd_analytic),
                num(pf.map(|e| e.value)),
                num(pf.map(|e| e.ci_halfwidth)),
                num(pmd.map(|e| e.value)),
                num(pmd.map(|e| e.ci_halfwidth)),
                pmd.map(|e| e.trials.to_string()).unwrap_or_default(),
                pmd.map_or(seed, |e| e.seed).to_string(),
            ])
            .map_err(io)?;
        }
    }
    out.flush().map_err(|e| CliError::Config(format!("writing CSV: {e}")))
}
