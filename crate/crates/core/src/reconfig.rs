//! Single-user sensing with a reconfigurable antenna.
//!
//! The antenna cycles through Q radiation states, each seeing an independent
//! Rayleigh-faded SNR γⱼ. In *switching* mode (no CSI) state j is held for
//! lⱼ consecutive samples, so the energy statistic is Y = Σⱼ (1+γⱼ)·xⱼ with
//! xⱼ ~ χ²(2lⱼ). In *selection* mode (CSI available) all M samples are sensed
//! on the strongest state.

use std::fmt;

use crate::channel::{self, AvgSnr, SnrValue, StateRealizations};
use crate::detector::{self, GainSummary, OperatingPoint, Provenance};
use crate::error::{Error, Result};
use crate::quad;
use crate::specfun;

/// Whether the receiver knows the per-state channel gains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsiMode {
    Switching,
    Selection,
}

impl fmt::Display for CsiMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CsiMode::Switching => "switching",
            CsiMode::Selection => "selection",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconfigParams {
    states: u32,
    samples: u32,
    alloc: Vec<u32>,
    lambda: f64,
    mode: CsiMode,
}

impl ReconfigParams {
    pub fn new(states: u32, samples: u32, alloc: Vec<u32>, lambda: f64, mode: CsiMode) -> Result<Self> {
        const OP: &str = "ReconfigParams";
        detector::check_samples(OP, samples)?;
        detector::check_lambda(OP, lambda)?;
        if states == 0 {
            return Err(Error::domain(OP, "need at least one antenna state"));
        }
        if alloc.is_empty() || alloc.len() > states as usize {
            return Err(Error::domain(
                OP,
                format!("allocation covers {} states, expected 1..={states}", alloc.len()),
            ));
        }
        if alloc.contains(&0) {
            return Err(Error::domain(OP, "every used state needs at least one sample"));
        }
        let used: u64 = alloc.iter().map(|&l| l as u64).sum();
        if used > samples as u64 {
            return Err(Error::domain(
                OP,
                format!("allocation uses {used} > M = {samples} samples"),
            ));
        }
        Ok(ReconfigParams {
            states,
            samples,
            alloc,
            lambda,
            mode,
        })
    }

    /// Equal dwell allocation and the threshold for `P_F = alpha`.
    ///
    /// Both modes sense 2M real dimensions of noise under H₀, so they share
    /// the single-user threshold.
    pub fn calibrated(states: u32, samples: u32, alpha: f64, mode: CsiMode) -> Result<Self> {
        let alloc = allocate_samples(samples, states)?;
        let lambda = detector::calibrate_lambda(samples, alpha)?;
        Self::new(states, samples, alloc, lambda, mode)
    }

    pub fn states(&self) -> u32 {
        self.states
    }

    pub fn samples(&self) -> u32 {
        self.samples
    }

    pub fn alloc(&self) -> &[u32] {
        &self.alloc
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mode(&self) -> CsiMode {
        self.mode
    }
}

/// Σⱼ cⱼ·xⱼ with xⱼ ~ χ²(kⱼ): list of (coefficient, degrees of freedom).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedChiSqSpec {
    terms: Vec<(f64, u32)>,
}

impl WeightedChiSqSpec {
    /// Coefficients 1 + γⱼ with 2lⱼ degrees of freedom.
    pub fn from_states(alloc: &[u32], states: &StateRealizations) -> Result<Self> {
        if alloc.len() != states.len() {
            return Err(Error::domain(
                "WeightedChiSqSpec",
                format!("{} dwell lengths for {} states", alloc.len(), states.len()),
            ));
        }
        let terms = alloc
            .iter()
            .zip(states.as_slice())
            .map(|(&l, g)| (1.0 + g.linear(), 2 * l))
            .collect();
        Ok(WeightedChiSqSpec { terms })
    }

    pub fn new(terms: Vec<(f64, u32)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::domain("WeightedChiSqSpec", "no terms"));
        }
        for &(c, k) in &terms {
            if !(c >= 1.0 && c.is_finite()) {
                return Err(Error::domain("WeightedChiSqSpec", format!("coefficient {c} < 1")));
            }
            if k % 2 != 0 {
                return Err(Error::domain(
                    "WeightedChiSqSpec",
                    format!("odd degrees of freedom {k}"),
                ));
            }
        }
        Ok(WeightedChiSqSpec { terms })
    }

    pub fn terms(&self) -> &[(f64, u32)] {
        &self.terms
    }

    /// Total samples M = Σ kⱼ / 2.
    pub fn samples(&self) -> u32 {
        self.terms.iter().map(|&(_, k)| k / 2).sum()
    }

    fn check(&self, op: &'static str) -> Result<()> {
        if self.terms.iter().any(|&(_, k)| k == 0) {
            return Err(Error::Degenerate {
                op,
                detail: "a state has zero dwell".into(),
            });
        }
        Ok(())
    }
}

/// Equal split of M samples over Q states.
///
/// Each state gets ⌊M/Q⌋ samples and the first M mod Q states one more, so
/// every sample is used. With fewer samples than states only M states are
/// visited, one sample each.
pub fn allocate_samples(samples: u32, states: u32) -> Result<Vec<u32>> {
    if samples == 0 || states == 0 {
        return Err(Error::domain("allocate_samples", "M and Q must be positive"));
    }
    if samples < states {
        return Ok(vec![1; samples as usize]);
    }
    let base = samples / states;
    let extra = samples % states;
    Ok((0..states).map(|j| base + u32::from(j < extra)).collect())
}

/// The two branches of the weighted chi-square CDF approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchingCdfParts {
    /// Geometric-mean branch H(w).
    pub h: f64,
    /// Per-dimension mixture branch G(w).
    pub g: f64,
    /// w = λ / Σ lⱼ(1 + γⱼ).
    pub w: f64,
}

/// Evaluates H(w) and G(w) at threshold `lambda`.
///
/// G sums over the 2M real dimensions: state j's coefficient appears 2lⱼ
/// times.
pub fn switching_cdf_parts(spec: &WeightedChiSqSpec, lambda: f64) -> Result<SwitchingCdfParts> {
    const OP: &str = "pmd_switching_conditional";
    spec.check(OP)?;
    detector::check_lambda(OP, lambda)?;
    let m = spec.samples() as f64;
    let weighted: f64 = spec.terms.iter().map(|&(c, k)| (k / 2) as f64 * c).sum();
    let w = lambda / weighted;
    let ln_geo = spec.terms.iter().map(|&(c, k)| (k / 2) as f64 * c.ln()).sum::<f64>() / m;
    let h = specfun::reg_lower_gamma(m, lambda / ln_geo.exp())?;
    let mut g = 0.0;
    for &(c, k) in &spec.terms {
        let shape = lambda / (2.0 * w * c);
        let p = specfun::reg_lower_gamma(shape, lambda / c)?;
        g += k as f64 * w * c / lambda * p;
    }
    Ok(SwitchingCdfParts { h, g, w })
}

/// Conditional missed detection of state switching, min{H(w), G(w)} in [0, 1].
pub fn pmd_switching_conditional(spec: &WeightedChiSqSpec, lambda: f64) -> Result<f64> {
    let parts = switching_cdf_parts(spec, lambda)?;
    Ok(parts.h.min(parts.g).clamp(0.0, 1.0))
}

/// High-SNR conditional missed detection λ^M / (Γ(M+1) Π (1+γⱼ)^{lⱼ}); raw value.
pub fn pmd_switching_asymptotic_conditional(spec: &WeightedChiSqSpec, lambda: f64) -> Result<f64> {
    const OP: &str = "pmd_switching_asymptotic_conditional";
    spec.check(OP)?;
    detector::check_lambda(OP, lambda)?;
    let m = spec.samples() as f64;
    let ln_prod: f64 = spec.terms.iter().map(|&(c, k)| (k / 2) as f64 * c.ln()).sum();
    Ok((m * lambda.ln() - specfun::ln_gamma(m + 1.0)? - ln_prod).exp())
}

/// E[(1+γ)^{−l}] for γ ~ exponential(γ̄), by quadrature.
pub fn dwell_average(dwell: u32, avg: AvgSnr) -> Result<f64> {
    if dwell == 0 {
        return Err(Error::domain("dwell_average", "dwell must be positive"));
    }
    let g = avg.linear();
    let l = dwell as f64;
    let breaks = quad::breaks_around(1.0 / g, detector::T_MAX);
    quad::integrate(|t| (-t - l * (g * t).ln_1p()).exp(), &breaks, detector::AVG_TOL)
}

/// How [`avg_pmd_switching`] averages over the state gains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwitchingAverage {
    /// Closed-form high-SNR limit, needs every lⱼ >= 2.
    Asymptotic,
    /// Product of one-dimensional quadratures.
    Quadrature,
}

/// Fading-averaged switching missed detection built on the asymptotic
/// conditional form. Raw value: it is only meaningful where it is small.
pub fn avg_pmd_switching(params: &ReconfigParams, avg: AvgSnr, method: SwitchingAverage) -> Result<f64> {
    const OP: &str = "avg_pmd_switching";
    let m: f64 = params.alloc.iter().map(|&l| l as f64).sum();
    let lead = m * params.lambda.ln() - specfun::ln_gamma(m + 1.0)?;
    let ln_avg = match method {
        SwitchingAverage::Quadrature => {
            let mut acc = 0.0;
            for &l in &params.alloc {
                acc += dwell_average(l, avg)?.ln();
            }
            acc
        }
        SwitchingAverage::Asymptotic => {
            if let Some(l) = params.alloc.iter().find(|&&l| l < 2) {
                return Err(Error::domain(OP, format!("asymptotic form needs dwell >= 2, got {l}")));
            }
            let q = params.alloc.len() as f64;
            -params.alloc.iter().map(|&l| (l as f64 - 1.0).ln()).sum::<f64>() - q * avg.linear().ln()
        }
    };
    Ok((lead + ln_avg).exp())
}

/// d = min{M, Q}. Switching reports no coding gain; selection attaches H_Q.
pub fn diversity_reconfig(samples: u32, states: u32, mode: CsiMode) -> Result<GainSummary> {
    if samples == 0 || states == 0 {
        return Err(Error::domain("diversity_reconfig", "M and Q must be positive"));
    }
    Ok(GainSummary {
        diversity: samples.min(states) as f64,
        coding_gain: None,
        selection_gain: match mode {
            CsiMode::Switching => None,
            CsiMode::Selection => Some(specfun::harmonic(states as u64)),
        },
    })
}

/// Missed detection when sensing all M samples on the strongest state.
pub fn pmd_selection_conditional(samples: u32, lambda: f64, gamma_max: SnrValue) -> Result<f64> {
    detector::pmd_single(samples, lambda, gamma_max)
}

/// Density of the strongest state used by [`avg_pmd_selection`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxPdf {
    Exact,
    /// High-SNR dominant form; not normalized, so the result is raw.
    Dominant,
}

/// Average missed detection of state selection over the max-of-Q density.
pub fn avg_pmd_selection(samples: u32, lambda: f64, avg: AvgSnr, states: u32, pdf: MaxPdf) -> Result<f64> {
    detector::check_samples("avg_pmd_selection", samples)?;
    detector::check_lambda("avg_pmd_selection", lambda)?;
    if states == 0 {
        return Err(Error::domain("avg_pmd_selection", "Q must be positive"));
    }
    let mf = samples as f64;
    let q = states as i32;
    let cond = |gamma: f64| specfun::reg_lower_gamma(mf, lambda / (2.0 * (1.0 + gamma))).unwrap_or(f64::NAN);
    let v = match pdf {
        MaxPdf::Exact => detector::fading_average(samples, lambda, avg, cond, |t| {
            q as f64 * (-t).exp() * (-(-t).exp_m1()).powi(q - 1)
        })?
        .clamp(0.0, 1.0),
        MaxPdf::Dominant => {
            detector::fading_average(samples, lambda, avg, cond, |t| q as f64 * (-t).exp() * t.powi(q - 1))?
        }
    };
    Ok(v)
}

/// Selection gain E{γ_max}/E{γ} = H_Q.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionGain {
    pub linear: f64,
}

impl SelectionGain {
    pub fn db(&self) -> f64 {
        10.0 * self.linear.log10()
    }
}

pub fn selection_gain(states: u32) -> SelectionGain {
    SelectionGain {
        linear: specfun::harmonic(states as u64),
    }
}

/// Large-Q form of the selection gain, ln Q + γ_E.
pub fn selection_gain_large_q(states: u32) -> f64 {
    (states as f64).ln() + specfun::EULER_GAMMA
}

/// Shortened sensing window for state selection, max{⌈M/H_Q⌉, Q}.
pub fn reduced_samples(samples: u32, states: u32) -> Result<u32> {
    if samples == 0 || states == 0 {
        return Err(Error::domain("reduced_samples", "M and Q must be positive"));
    }
    let shortened = (samples as f64 / specfun::harmonic(states as u64)).ceil() as u32;
    Ok(shortened.max(states))
}

/// Operating point of either reconfigurable mode.
///
/// Selection uses exact quadrature over the max-of-Q density. Switching uses
/// the quadrature form of the asymptotic average, clamped to [0, 1], so it
/// saturates at 1 away from high SNR.
pub fn operating_point(params: &ReconfigParams, avg: AvgSnr) -> Result<OperatingPoint> {
    let pf = detector::pf_single(params.samples, params.lambda)?;
    match params.mode {
        CsiMode::Selection => {
            let pmd = avg_pmd_selection(params.samples, params.lambda, avg, params.states, MaxPdf::Exact)?;
            Ok(OperatingPoint::from_pmd(pf, pmd, Provenance::Analytic, 0.0))
        }
        CsiMode::Switching => {
            let pmd = avg_pmd_switching(params, avg, SwitchingAverage::Quadrature)?;
            Ok(OperatingPoint::from_pmd(pf, pmd, Provenance::Asymptotic, 0.0))
        }
    }
}

/// The two state-selection series terms with their constants left free:
/// γ̄^{−Q}·₁F₂(Q; Q+1, Q−M+1; z) and γ̄^{−M}·₁F₂(M; M+1, Q−M+1; z), z = λ/(2γ̄).
///
/// Only defined when Q − M + 1 is not a non-positive integer, i.e. M <= Q.
pub fn selection_series_terms(samples: u32, states: u32, lambda: f64, avg: AvgSnr) -> Result<(f64, f64)> {
    let (m, q) = (samples as f64, states as f64);
    let z = lambda / (2.0 * avg.linear());
    let b2 = q - m + 1.0;
    let first = specfun::hypergeom_1f2(q, q + 1.0, b2, z)? * avg.linear().powf(-q);
    let second = specfun::hypergeom_1f2(m, m + 1.0, b2, z)? * avg.linear().powf(-m);
    Ok((first, second))
}

/// Least-squares constants (K₁, K₂) for `pmd ≈ K₁·t₁ + K₂·t₂`, fitted in
/// relative error over `(avg, pmd)` samples.
pub fn fit_selection_constants(samples: u32, states: u32, lambda: f64, points: &[(AvgSnr, f64)]) -> Result<(f64, f64)> {
    let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(avg, pmd) in points {
        if pmd <= 0.0 {
            continue;
        }
        let (t1, t2) = selection_series_terms(samples, states, lambda, avg)?;
        let (u, v) = (t1 / pmd, t2 / pmd);
        a11 += u * u;
        a12 += u * v;
        a22 += v * v;
        b1 += u;
        b2 += v;
    }
    let det = a11 * a22 - a12 * a12;
    if !(det.abs() > 0.0) || !det.is_finite() {
        return Err(Error::Degenerate {
            op: "fit_selection_constants",
            detail: "singular normal equations".into(),
        });
    }
    Ok(((b1 * a22 - b2 * a12) / det, (a11 * b2 - a12 * b1) / det))
}

/// Draws Q state gains and returns the realization used by selection.
pub fn best_state<R: rand::Rng + ?Sized>(avg: AvgSnr, states: u32, rng: &mut R) -> Result<SnrValue> {
    Ok(channel::sample_states(avg, states as usize, rng)?.max())
}
