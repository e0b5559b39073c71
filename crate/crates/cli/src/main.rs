use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use reconsense::channel::derive_seed;
use reconsense::detector::{self, DetectorParams};
use reconsense::fusion::{self, FusionParams};
use reconsense::reconfig::{self, CsiMode, ReconfigParams};
use reconsense::simkit::{
    estimate_point, fit_slope, sweep_with, Escalation, Hypothesis, McOptions, Scheme, SchemeConfig, SlopeOptions,
    SweepCurve, SweepOptions,
};

mod output;
mod scenario;

use scenario::{Mode, Scenario};

const SMOKE_TRIALS: u64 = 100_000;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numeric(reconsense::Error),
    #[error("{0}")]
    Calibration(String),
}

impl From<reconsense::Error> for CliError {
    fn from(e: reconsense::Error) -> Self {
        if e.is_input_error() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numeric(e)
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) | CliError::Calibration(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "reconsense",
    version,
    about = "Spectrum sensing sweeps: analytic curves and Monte Carlo"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Overrides shared by every subcommand; each falls back to the scenario file.
#[derive(clap::Args, Clone)]
struct RunArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Cap for the automatic trial escalation; 0 turns escalation off.
    #[arg(long, default_value_t = 100_000_000)]
    max_trials: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Print the calibrated threshold and check the false alarm rate by simulation.
    Calibrate {
        #[arg(long, required_unless_present = "which", conflicts_with = "which")]
        scenario: Option<PathBuf>,
        /// Calibrate every scheme of a figure preset instead.
        #[arg(long, value_enum)]
        which: Option<Figure>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write the curves of one of the preset figures.
    Figure {
        #[arg(long, value_enum)]
        which: Figure,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Sweep the scenario's scheme over its SNR grid.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Fit the high-SNR slope and print it beside the analytic diversity order.
    Slope {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Figure {
    Fig1,
    Fig2,
    Fig3,
}

/// The schemes plotted in each figure.
fn preset(which: Figure) -> Result<Vec<Scheme>, CliError> {
    let noncoop = |m, a| DetectorParams::calibrated(m, a).map(Scheme::NonCoop);
    let coop = |n, m, a| FusionParams::calibrated(n, 1, m, a).map(Scheme::Coop);
    let reconf = |q, m, mode| ReconfigParams::calibrated(q, m, 0.05, mode).map(Scheme::Reconfig);
    let fig2 = || -> reconsense::Result<Vec<Scheme>> {
        Ok(vec![
            noncoop(100, 0.05)?,
            coop(10, 10, 0.05)?,
            reconf(10, 100, CsiMode::Switching)?,
            reconf(10, 100, CsiMode::Selection)?,
        ])
    };
    let out = match which {
        Figure::Fig1 => {
            let mut v = Vec::new();
            for (nm, r) in [(4, 2), (25, 5), (100, 10)] {
                v.push(noncoop(nm, 0.01)?);
                v.push(coop(r, r, 0.01)?);
            }
            v
        }
        Figure::Fig2 => fig2()?,
        Figure::Fig3 => {
            let mut v = fig2()?;
            // the reduced count from the formula, and the value the figure was drawn with
            v.push(reconf(10, reconfig::reduced_samples(100, 10)?, CsiMode::Selection)?);
            v.push(reconf(10, 33, CsiMode::Selection)?);
            v
        }
    };
    Ok(out)
}

struct Run {
    grid: Vec<f64>,
    trials: u64,
    seed: u64,
    opts: SweepOptions,
    out: Option<PathBuf>,
}

impl Run {
    fn new(args: &RunArgs, scenario: Option<&Scenario>) -> Result<Self, CliError> {
        let grid = match scenario {
            Some(s) => s.grid()?,
            None => scenario::grid(-20.0, 20.0, 1.0)?,
        };
        let trials = args.trials.or(scenario.map(|s| s.trials)).unwrap_or(100_000);
        let seed = args.seed.or(scenario.map(|s| s.seed)).unwrap_or(1);
        let mode = args.mode.or(scenario.map(|s| s.mode)).unwrap_or(Mode::Both);
        let escalation = (args.max_trials > 0).then(|| Escalation {
            max_trials: args.max_trials.max(trials),
            ..Escalation::default()
        });
        Ok(Run {
            grid,
            trials,
            seed,
            opts: SweepOptions {
                mode: mode.into(),
                mc: McOptions {
                    escalation,
                    ..McOptions::default()
                },
            },
            out: args.out.clone().or(scenario.and_then(|s| s.output.clone())),
        })
    }

    fn sweep(&self, scheme: &Scheme, seed: u64) -> Result<SweepCurve, CliError> {
        let template = SchemeConfig::new(scheme.clone(), reconsense::channel::AvgSnr::new(1.0)?);
        Ok(sweep_with(&template, &self.grid, self.trials, seed, &self.opts)?)
    }

    fn open(&self) -> Result<Box<dyn Write>, CliError> {
        match &self.out {
            Some(p) => std::fs::File::create(p)
                .map(|f| Box::new(std::io::BufWriter::new(f)) as Box<dyn Write>)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display()))),
            None => Ok(Box::new(std::io::stdout().lock())),
        }
    }
}

fn calibrate(schemes: &[Scheme], seed: u64) -> Result<(), CliError> {
    let mut failed = Vec::new();
    for (k, scheme) in schemes.iter().enumerate() {
        let label = scenario::label(scheme);
        println!("[{label}]");
        match scheme {
            Scheme::NonCoop(d) => println!("lambda = {}", d.lambda()),
            Scheme::Coop(f) => {
                println!("lambda = {}", f.per_user().lambda());
                let d = f.per_user();
                println!("local_pf = {}", detector::pf_single(d.samples(), d.lambda())?);
            }
            Scheme::Reconfig(r) => {
                println!("lambda = {}", r.lambda());
                println!("alloc = {:?}", r.alloc());
            }
        }
        let pf = scheme.pf_analytic()?;
        println!("pf_analytic = {pf}");
        let config = SchemeConfig::new(scheme.clone(), reconsense::channel::AvgSnr::new(1.0)?);
        let e = estimate_point(&config, Hypothesis::H0, SMOKE_TRIALS, derive_seed(seed, k as u64))?;
        let ok = e.covers(pf);
        println!(
            "pf_mc = {} +- {} over {} trials: {}",
            e.value,
            e.ci_halfwidth,
            e.trials,
            if ok { "ok" } else { "MISMATCH" }
        );
        if !ok {
            failed.push(label);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Calibration(format!(
            "empirical false alarm outside the 99% CI for {}",
            failed.join(", ")
        )))
    }
}

fn analytic_diversity(scheme: &Scheme) -> Result<f64, CliError> {
    Ok(match scheme {
        Scheme::NonCoop(_) => 1.0,
        Scheme::Coop(f) => fusion::gains_coop(f)?.diversity,
        Scheme::Reconfig(r) => reconfig::diversity_reconfig(r.samples(), r.states(), r.mode())?.diversity,
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Calibrate { scenario, which, seed } => {
            let (schemes, file_seed) = match (scenario, which) {
                (Some(path), _) => {
                    let s = Scenario::load(&path)?;
                    (vec![s.build()?], s.seed)
                }
                (None, Some(w)) => (preset(w)?, 1),
                (None, None) => unreachable!("clap enforces one of the two"),
            };
            calibrate(&schemes, seed.unwrap_or(file_seed))
        }
        Command::Figure { which, run } => {
            let r = Run::new(&run, None)?;
            let mut rows = Vec::new();
            for (k, scheme) in preset(which)?.iter().enumerate() {
                log::info!("{}", scenario::label(scheme));
                rows.push((scenario::label(scheme), r.sweep(scheme, derive_seed(r.seed, k as u64))?));
            }
            output::write_csv(r.open()?, &rows, r.seed)
        }
        Command::Sweep { scenario, run } => {
            let s = Scenario::load(&scenario)?;
            let r = Run::new(&run, Some(&s))?;
            let scheme = s.build()?;
            let curve = r.sweep(&scheme, r.seed)?;
            output::write_csv(r.open()?, &[(scenario::label(&scheme), curve)], r.seed)
        }
        Command::Slope { scenario, run } => {
            let s = Scenario::load(&scenario)?;
            let r = Run::new(&run, Some(&s))?;
            let scheme = s.build()?;
            let curve = r.sweep(&scheme, r.seed)?;
            let opts = match s.window()? {
                Some((lo, hi)) => SlopeOptions::window(lo, hi),
                None => SlopeOptions {
                    pmd_band: Some((1e-5, 1e-2)),
                    ..SlopeOptions::window(f64::NEG_INFINITY, f64::INFINITY)
                },
            };
            let fit = fit_slope(&curve, &opts)?;
            let mut out = r.open()?;
            let d = analytic_diversity(&scheme)?;
            writeln!(out, "scheme = {}", scenario::label(&scheme))
                .and_then(|_| writeln!(out, "fitted_slope = {:.4}", fit.slope))
                .and_then(|_| writeln!(out, "analytic_diversity = {d}"))
                .and_then(|_| writeln!(out, "cells_used = {}", fit.used))
                .and_then(|_| writeln!(out, "cells_excluded = {}", fit.excluded))
                .map_err(|e| CliError::Config(e.to_string()))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
