//! Monte Carlo engine for the three sensing schemes.
//!
//! Trial `i` of an estimate draws from its own ChaCha8 substream
//! `(seed, i)`, and results are merged by adding integer event counts, so an
//! estimate is bit-identical whatever the thread count or scheduling.

use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::channel::{self, AvgSnr, RandomStream, StreamFactory};
use crate::detector::{self, DetectorParams, OperatingPoint};
use crate::error::{Error, Result};
use crate::fusion::{self, FusionParams};
use crate::reconfig::{self, CsiMode, ReconfigParams};

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.576;

#[derive(Debug, Clone, PartialEq)]
pub enum Scheme {
    NonCoop(DetectorParams),
    Coop(FusionParams),
    Reconfig(ReconfigParams),
}

/// Flat tag of a [`Scheme`], with the reconfigurable mode spelled out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    NonCoop,
    Coop,
    Switching,
    Selection,
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeKind::NonCoop => "noncoop",
            SchemeKind::Coop => "coop",
            SchemeKind::Switching => "switching",
            SchemeKind::Selection => "selection",
        })
    }
}

impl Scheme {
    pub fn kind(&self) -> SchemeKind {
        match self {
            Scheme::NonCoop(_) => SchemeKind::NonCoop,
            Scheme::Coop(_) => SchemeKind::Coop,
            Scheme::Reconfig(p) => match p.mode() {
                CsiMode::Switching => SchemeKind::Switching,
                CsiMode::Selection => SchemeKind::Selection,
            },
        }
    }

    /// Samples sensed in total: N·M for cooperation, M otherwise.
    pub fn total_samples(&self) -> u64 {
        match self {
            Scheme::NonCoop(d) => d.samples() as u64,
            Scheme::Coop(f) => f.total_samples(),
            Scheme::Reconfig(r) => r.samples() as u64,
        }
    }

    /// Analytic false-alarm probability of the whole scheme.
    pub fn pf_analytic(&self) -> Result<f64> {
        match self {
            Scheme::NonCoop(d) => detector::pf_single(d.samples(), d.lambda()),
            Scheme::Coop(f) => fusion::global_pf(f),
            Scheme::Reconfig(r) => detector::pf_single(r.samples(), r.lambda()),
        }
    }
}

/// A scheme evaluated at one average SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub avg_snr: AvgSnr,
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, avg_snr: AvgSnr) -> Self {
        SchemeConfig { scheme, avg_snr }
    }

    pub fn at(&self, avg_snr: AvgSnr) -> Self {
        SchemeConfig {
            scheme: self.scheme.clone(),
            avg_snr,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    H0,
    H1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Present,
    Absent,
}

/// How a detector's energy statistic is generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleModel {
    /// One gamma draw per dwell: (1+γ)·χ²(2l), the exact law of Σ|r|².
    #[default]
    Block,
    /// Every received sample r = √γ·s + n drawn from its Gaussian components.
    PerSample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Uses rayon when the `parallel` feature is on, otherwise runs sequentially.
    #[default]
    Parallel,
    Sequential,
}

/// Trial escalation when too few events were seen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Escalation {
    pub min_events: u64,
    pub factor: u64,
    pub max_trials: u64,
}

impl Default for Escalation {
    fn default() -> Self {
        Escalation {
            min_events: 100,
            factor: 10,
            max_trials: 100_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct McOptions {
    pub execution: Execution,
    pub sample_model: SampleModel,
    pub escalation: Option<Escalation>,
}

/// Empirical probability of the event of interest: a false alarm under H₀,
/// a missed detection under H₁.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub events: u64,
    pub trials: u64,
    pub ci_halfwidth: f64,
    pub seed: u64,
}

impl McEstimate {
    fn from_counts(events: u64, trials: u64, seed: u64) -> Self {
        let v = events as f64 / trials as f64;
        McEstimate {
            value: v,
            events,
            trials,
            ci_halfwidth: Z99 * (v * (1.0 - v) / trials as f64).sqrt(),
            seed,
        }
    }

    /// True when `x` lies inside the 99% interval.
    pub fn covers(&self, x: f64) -> bool {
        (self.value - x).abs() <= self.ci_halfwidth
    }

    /// True when the two 99% intervals overlap.
    pub fn overlaps(&self, other: &McEstimate) -> bool {
        (self.value - other.value).abs() <= self.ci_halfwidth + other.ci_halfwidth
    }
}

enum Kind {
    Single {
        samples: u32,
        energy: Gamma<f64>,
    },
    Coop {
        users: u32,
        votes: u32,
        samples: u32,
        energy: Gamma<f64>,
    },
    Switching {
        dwells: Vec<(u32, Gamma<f64>)>,
    },
    Selection {
        states: u32,
        samples: u32,
        energy: Gamma<f64>,
    },
}

/// A config unpacked into the samplers one trial needs.
struct TrialModel {
    kind: Kind,
    lambda: f64,
    avg: AvgSnr,
    model: SampleModel,
}

fn gamma(shape: u32) -> Gamma<f64> {
    Gamma::new(shape as f64, 1.0).expect("positive integer shape")
}

impl TrialModel {
    fn new(config: &SchemeConfig, model: SampleModel) -> Self {
        let (kind, lambda) = match &config.scheme {
            Scheme::NonCoop(d) => (
                Kind::Single {
                    samples: d.samples(),
                    energy: gamma(d.samples()),
                },
                d.lambda(),
            ),
            Scheme::Coop(f) => {
                let d = f.per_user();
                (
                    Kind::Coop {
                        users: f.users(),
                        votes: f.votes(),
                        samples: d.samples(),
                        energy: gamma(d.samples()),
                    },
                    d.lambda(),
                )
            }
            Scheme::Reconfig(r) => match r.mode() {
                CsiMode::Switching => (
                    Kind::Switching {
                        dwells: r.alloc().iter().map(|&l| (l, gamma(l))).collect(),
                    },
                    r.lambda(),
                ),
                CsiMode::Selection => (
                    Kind::Selection {
                        states: r.states(),
                        samples: r.samples(),
                        energy: gamma(r.samples()),
                    },
                    r.lambda(),
                ),
            },
        };
        TrialModel {
            kind,
            lambda,
            avg: config.avg_snr,
            model,
        }
    }

    /// Instantaneous SNR of one branch; zero under H₀.
    fn channel<R: Rng>(&self, h1: bool, rng: &mut R) -> f64 {
        if !h1 {
            return 0.0;
        }
        match self.model {
            SampleModel::Block => channel::exponential_snr(self.avg, rng),
            SampleModel::PerSample => {
                // |h|² for a circular complex Gaussian h with E|h|² = γ̄
                let x: f64 = rng.sample(StandardNormal);
                let y: f64 = rng.sample(StandardNormal);
                0.5 * self.avg.linear() * (x * x + y * y)
            }
        }
    }

    /// Σ|r|² over `len` samples at SNR `g`.
    fn energy<R: Rng>(&self, len: u32, block: &Gamma<f64>, g: f64, rng: &mut R) -> f64 {
        match self.model {
            SampleModel::Block => 2.0 * (1.0 + g) * block.sample(rng),
            SampleModel::PerSample => {
                let amp = g.sqrt();
                let mut y = 0.0;
                for _ in 0..2 * len {
                    let s: f64 = rng.sample(StandardNormal);
                    let n: f64 = rng.sample(StandardNormal);
                    let r = amp * s + n;
                    y += r * r;
                }
                y
            }
        }
    }

    fn trial<R: Rng>(&self, hyp: Hypothesis, rng: &mut R) -> Decision {
        let h1 = hyp == Hypothesis::H1;
        let present = match &self.kind {
            Kind::Single { samples, energy } => {
                let g = self.channel(h1, rng);
                self.energy(*samples, energy, g, rng) > self.lambda
            }
            Kind::Coop {
                users,
                votes,
                samples,
                energy,
            } => {
                let mut hits = 0;
                for _ in 0..*users {
                    let g = self.channel(h1, rng);
                    if self.energy(*samples, energy, g, rng) > self.lambda {
                        hits += 1;
                    }
                }
                hits >= *votes
            }
            Kind::Switching { dwells } => {
                let mut y = 0.0;
                for (l, energy) in dwells {
                    let g = self.channel(h1, rng);
                    y += self.energy(*l, energy, g, rng);
                }
                y > self.lambda
            }
            Kind::Selection {
                states,
                samples,
                energy,
            } => {
                let mut best = 0.0f64;
                for _ in 0..*states {
                    best = best.max(self.channel(h1, rng));
                }
                self.energy(*samples, energy, best, rng) > self.lambda
            }
        };
        if present {
            Decision::Present
        } else {
            Decision::Absent
        }
    }

    fn is_event(&self, hyp: Hypothesis, rng: &mut ChaCha8Rng) -> bool {
        let d = self.trial(hyp, rng);
        match hyp {
            Hypothesis::H0 => d == Decision::Present,
            Hypothesis::H1 => d == Decision::Absent,
        }
    }

    /// Events among trials `start..end` of the stream family `seed`.
    fn count(&self, hyp: Hypothesis, seed: u64, start: u64, end: u64, exec: Execution) -> u64 {
        let factory = StreamFactory::new(seed);
        let one = |i: u64| u64::from(self.is_event(hyp, &mut factory.stream(i)));
        match exec {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (start..end).into_par_iter().map(one).sum()
            }
            _ => (start..end).map(one).sum(),
        }
    }
}

/// One trial on the given substream, using the block energy model.
pub fn run_trial(config: &SchemeConfig, hypothesis: Hypothesis, stream: RandomStream) -> Decision {
    run_trial_with(config, hypothesis, stream, SampleModel::Block)
}

pub fn run_trial_with(
    config: &SchemeConfig,
    hypothesis: Hypothesis,
    stream: RandomStream,
    model: SampleModel,
) -> Decision {
    TrialModel::new(config, model).trial(hypothesis, &mut stream.rng())
}

/// Smallest trial count accepted by the estimators.
pub const MIN_TRIALS: u64 = 1000;

/// Fraction of `trials` trials in which the event of interest occurred.
pub fn estimate_point(config: &SchemeConfig, hypothesis: Hypothesis, trials: u64, seed: u64) -> Result<McEstimate> {
    estimate_point_with(config, hypothesis, trials, seed, &McOptions::default())
}

/// [`estimate_point`] with explicit options. With escalation on, the trial
/// count is multiplied until enough events are seen or the cap is reached;
/// earlier trials are kept and later ones continue the same index sequence.
pub fn estimate_point_with(
    config: &SchemeConfig,
    hypothesis: Hypothesis,
    trials: u64,
    seed: u64,
    opts: &McOptions,
) -> Result<McEstimate> {
    if trials < MIN_TRIALS {
        return Err(Error::domain(
            "estimate_point",
            format!("{trials} trials, need at least {MIN_TRIALS}"),
        ));
    }
    let model = TrialModel::new(config, opts.sample_model);
    let mut done = 0;
    let mut events = 0;
    let mut target = trials;
    loop {
        events += model.count(hypothesis, seed, done, target, opts.execution);
        done = target;
        let Some(esc) = opts.escalation else { break };
        if events >= esc.min_events || done >= esc.max_trials {
            break;
        }
        target = done.saturating_mul(esc.factor.max(2)).min(esc.max_trials);
        log::debug!("escalating to {target} trials after {events} events");
    }
    Ok(McEstimate::from_counts(events, done, seed))
}

/// Analytic operating point of a config.
///
/// Non-cooperative, cooperative and selection values come from exact fading
/// quadrature; switching from its high-SNR average clamped to [0, 1].
pub fn analytic_point(config: &SchemeConfig) -> Result<OperatingPoint> {
    match &config.scheme {
        Scheme::NonCoop(d) => detector::operating_point(d, config.avg_snr),
        Scheme::Coop(f) => fusion::operating_point(f, config.avg_snr),
        Scheme::Reconfig(r) => reconfig::operating_point(r, config.avg_snr),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepMode {
    Analytic,
    MonteCarlo,
    #[default]
    Both,
}

impl SweepMode {
    fn analytic(self) -> bool {
        self != SweepMode::MonteCarlo
    }

    fn monte_carlo(self) -> bool {
        self != SweepMode::Analytic
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub mode: SweepMode,
    pub mc: McOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            mode: SweepMode::Both,
            mc: McOptions {
                escalation: Some(Escalation::default()),
                ..McOptions::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub pf_analytic: Option<f64>,
    pub pmd_analytic: Option<f64>,
    pub pf_mc: Option<McEstimate>,
    pub pmd_mc: Option<McEstimate>,
}

impl SweepPoint {
    pub fn avg_snr(&self) -> AvgSnr {
        AvgSnr::from_db(self.snr_db).expect("grid values are finite")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCurve {
    pub kind: SchemeKind,
    pub points: Vec<SweepPoint>,
}

impl SweepCurve {
    pub fn snr_db(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.snr_db).collect()
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::domain("sweep", "empty SNR grid"));
    }
    if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain(
            "sweep",
            "SNR grid must be finite and strictly increasing",
        ));
    }
    Ok(())
}

/// Seed of the shared H₀ estimate of a sweep.
pub fn h0_seed(seed: u64) -> u64 {
    channel::derive_seed(seed, 0)
}

/// Seed of the H₁ estimate at grid index `k`.
pub fn h1_seed(seed: u64, k: usize) -> u64 {
    channel::derive_seed(seed, k as u64 + 1)
}

/// Analytic and Monte Carlo curves over `grid_db` with default options.
pub fn sweep(template: &SchemeConfig, grid_db: &[f64], trials: u64, seed: u64) -> Result<SweepCurve> {
    sweep_with(template, grid_db, trials, seed, &SweepOptions::default())
}

/// One H₁ estimate per grid value plus a single H₀ estimate shared by all
/// rows, since the threshold does not depend on the SNR.
pub fn sweep_with(
    template: &SchemeConfig,
    grid_db: &[f64],
    trials: u64,
    seed: u64,
    opts: &SweepOptions,
) -> Result<SweepCurve> {
    check_grid(grid_db)?;
    let pf_analytic = if opts.mode.analytic() {
        Some(template.scheme.pf_analytic()?)
    } else {
        None
    };
    let pf_mc = if opts.mode.monte_carlo() {
        Some(estimate_point_with(
            template,
            Hypothesis::H0,
            trials,
            h0_seed(seed),
            &opts.mc,
        )?)
    } else {
        None
    };
    let mut points = Vec::with_capacity(grid_db.len());
    for (k, &db) in grid_db.iter().enumerate() {
        let config = template.at(AvgSnr::from_db(db)?);
        let pmd_analytic = if opts.mode.analytic() {
            Some(analytic_point(&config)?.pmd)
        } else {
            None
        };
        let pmd_mc = if opts.mode.monte_carlo() {
            Some(estimate_point_with(
                &config,
                Hypothesis::H1,
                trials,
                h1_seed(seed, k),
                &opts.mc,
            )?)
        } else {
            None
        };
        points.push(SweepPoint {
            snr_db: db,
            pf_analytic,
            pmd_analytic,
            pf_mc,
            pmd_mc,
        });
    }
    Ok(SweepCurve {
        kind: template.scheme.kind(),
        points,
    })
}

/// Which column a slope is fitted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SlopeSource {
    /// Monte Carlo where present, analytic otherwise.
    #[default]
    Auto,
    MonteCarlo,
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeOptions {
    pub window_db: (f64, f64),
    /// Optional band of P_md values a cell must fall in.
    pub pmd_band: Option<(f64, f64)>,
    pub source: SlopeSource,
    /// Event floor below which a Monte Carlo cell is skipped.
    pub min_events: u64,
}

impl SlopeOptions {
    pub fn window(lo: f64, hi: f64) -> Self {
        SlopeOptions {
            window_db: (lo, hi),
            pmd_band: None,
            source: SlopeSource::Auto,
            min_events: Escalation::default().min_events,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    /// Negated slope of log₁₀ P_md against log₁₀ γ̄.
    pub slope: f64,
    pub intercept: f64,
    pub used: usize,
    pub excluded: usize,
}

/// Diversity slope over `window_db`; see [`fit_slope`].
pub fn fit_diversity_slope(curve: &SweepCurve, window_db: (f64, f64)) -> Result<f64> {
    fit_slope(curve, &SlopeOptions::window(window_db.0, window_db.1)).map(|f| f.slope)
}

/// Least-squares slope of log₁₀ P_md on log₁₀ γ̄, negated.
///
/// Cells inside the window that are empty, zero or under the event floor are
/// dropped with a warning. At least three cells must remain.
pub fn fit_slope(curve: &SweepCurve, opts: &SlopeOptions) -> Result<SlopeFit> {
    let (lo, hi) = opts.window_db;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut excluded = 0;
    for p in curve.points.iter().filter(|p| p.snr_db >= lo && p.snr_db <= hi) {
        let use_mc = match opts.source {
            SlopeSource::MonteCarlo => true,
            SlopeSource::Analytic => false,
            SlopeSource::Auto => p.pmd_mc.is_some(),
        };
        let value = if use_mc {
            match p.pmd_mc {
                Some(e) if e.events >= opts.min_events.max(1) => Some(e.value),
                Some(e) => {
                    log::warn!(
                        "{} dB: {} events in {} trials, below the floor; cell skipped",
                        p.snr_db,
                        e.events,
                        e.trials
                    );
                    None
                }
                None => None,
            }
        } else {
            p.pmd_analytic.filter(|&v| v > 0.0)
        };
        let value = value.filter(|&v| match opts.pmd_band {
            Some((a, b)) => v >= a && v <= b,
            None => true,
        });
        match value {
            Some(v) => {
                xs.push(p.snr_db / 10.0);
                ys.push(v.log10());
            }
            None => excluded += 1,
        }
    }
    if xs.len() < 3 {
        return Err(Error::InsufficientPoints { found: xs.len() });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let b = sxy / sxx;
    Ok(SlopeFit {
        slope: -b,
        intercept: my - b * mx,
        used: xs.len(),
        excluded,
    })
}

/// SNR (dB) at which `values` crosses `level`, by linear interpolation of
/// log₁₀ P_md in dB between the first bracketing pair.
pub fn crossing_db(snr_db: &[f64], values: &[f64], level: f64) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = snr_db
        .iter()
        .zip(values)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&x, &v)| (x, v.log10()))
        .collect();
    let target = level.log10();
    pairs.windows(2).find_map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if (y0 - target) * (y1 - target) <= 0.0 && y0 != y1 {
            Some(x0 + (target - y0) * (x1 - x0) / (y1 - y0))
        } else {
            None
        }
    })
}
