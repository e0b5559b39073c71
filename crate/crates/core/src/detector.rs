//! Single-user energy detection under Rayleigh fading.
//!
//! Convention: under H₀ the energy statistic Y = Σ|rᵢ|² over M complex
//! samples is chi-square with 2M degrees of freedom (unit variance per real
//! dimension), so `P_F = Q(M, λ/2)`. Under H₁ with instantaneous SNR γ each
//! real dimension has variance 1 + γ and `P_D = Q(M, λ/(2(1+γ)))`.

use std::fmt;

use crate::channel::{AvgSnr, SnrValue};
use crate::error::{Error, Result};
use crate::quad::{self, Tolerance};
use crate::specfun;

/// Parameters of one energy detector. `alpha` always equals the false-alarm
/// probability at `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    samples: u32,
    lambda: f64,
    alpha: f64,
}

impl DetectorParams {
    /// Threshold chosen so that `P_F = alpha`.
    pub fn calibrated(samples: u32, alpha: f64) -> Result<Self> {
        let lambda = calibrate_lambda(samples, alpha)?;
        Ok(DetectorParams { samples, lambda, alpha })
    }

    pub fn with_threshold(samples: u32, lambda: f64) -> Result<Self> {
        let alpha = pf_single(samples, lambda)?;
        Ok(DetectorParams { samples, lambda, alpha })
    }

    pub fn samples(&self) -> u32 {
        self.samples
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Where an operating point came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Analytic,
    Asymptotic,
    MonteCarlo,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Analytic => "analytic",
            Provenance::Asymptotic => "asymptotic",
            Provenance::MonteCarlo => "monte-carlo",
        })
    }
}

/// (P_F, P_D, P_md) at one average SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub pf: f64,
    pub pd: f64,
    pub pmd: f64,
    pub provenance: Provenance,
    /// Half-width of the 99% interval on `pmd`; zero for analytic values.
    pub ci_halfwidth: f64,
}

impl OperatingPoint {
    /// Builds a point from P_F and P_md, clamping both to [0, 1].
    pub fn from_pmd(pf: f64, pmd: f64, provenance: Provenance, ci_halfwidth: f64) -> Self {
        let pf = pf.clamp(0.0, 1.0);
        let pmd = pmd.clamp(0.0, 1.0);
        OperatingPoint {
            pf,
            pd: 1.0 - pmd,
            pmd,
            provenance,
            ci_halfwidth,
        }
    }
}

/// Diversity order d and coding gain A, with P_md ≍ (A γ̄)^{−d}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSummary {
    pub diversity: f64,
    /// `None` where no reliable coding gain is available.
    pub coding_gain: Option<f64>,
    /// Extra SNR factor from picking the best antenna state.
    pub selection_gain: Option<f64>,
}

impl GainSummary {
    pub fn coding_gain_db(&self) -> Option<f64> {
        self.coding_gain.map(|a| 10.0 * a.log10())
    }
}

pub(crate) fn check_samples(op: &'static str, m: u32) -> Result<()> {
    if m == 0 {
        Err(Error::domain(op, "sample count M must be at least 1"))
    } else {
        Ok(())
    }
}

pub(crate) fn check_lambda(op: &'static str, lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(op, format!("threshold {lambda} must be finite and > 0")))
    }
}

pub(crate) fn check_alpha(op: &'static str, alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(op, format!("alpha = {alpha} must lie in (0, 1)")))
    }
}

/// False-alarm probability `Q(M, λ/2)`.
pub fn pf_single(m: u32, lambda: f64) -> Result<f64> {
    check_samples("pf_single", m)?;
    check_lambda("pf_single", lambda)?;
    specfun::reg_upper_gamma(m as f64, lambda / 2.0)
}

/// Detection probability at instantaneous SNR γ, `Q(M, λ/(2(1+γ)))`.
pub fn pd_single(m: u32, lambda: f64, gamma: SnrValue) -> Result<f64> {
    check_samples("pd_single", m)?;
    check_lambda("pd_single", lambda)?;
    specfun::reg_upper_gamma(m as f64, lambda / (2.0 * (1.0 + gamma.linear())))
}

/// Missed detection at instantaneous SNR γ, computed directly rather than as 1 − P_D.
pub fn pmd_single(m: u32, lambda: f64, gamma: SnrValue) -> Result<f64> {
    check_samples("pmd_single", m)?;
    check_lambda("pmd_single", lambda)?;
    specfun::reg_lower_gamma(m as f64, lambda / (2.0 * (1.0 + gamma.linear())))
}

/// Threshold with `pf_single(M, λ) = α`.
pub fn calibrate_lambda(m: u32, alpha: f64) -> Result<f64> {
    check_samples("calibrate_lambda", m)?;
    check_alpha("calibrate_lambda", alpha)?;
    Ok(2.0 * specfun::inv_reg_upper_gamma(m as f64, alpha)?)
}

/// Closed-form high-SNR average detection probability,
/// `2 e^{1/γ̄} / Γ(M) · (λ/(2γ̄))^{M/2} · K_M(√(2λ/γ̄))`, clamped to [0, 1].
pub fn avg_pd_closed(m: u32, lambda: f64, avg: AvgSnr) -> Result<f64> {
    check_samples("avg_pd_closed", m)?;
    check_lambda("avg_pd_closed", lambda)?;
    let g = avg.linear();
    let mf = m as f64;
    let ln_v = std::f64::consts::LN_2 + 1.0 / g - specfun::ln_gamma(mf)?
        + 0.5 * mf * (lambda / (2.0 * g)).ln()
        + specfun::ln_bessel_k_int(m, (2.0 * lambda / g).sqrt())?;
    if !ln_v.is_finite() {
        return Err(Error::Degenerate {
            op: "avg_pd_closed",
            detail: format!("log-domain evaluation gave {ln_v}"),
        });
    }
    Ok(ln_v.exp().clamp(0.0, 1.0))
}

/// Relative tolerance of the fading-average quadratures.
pub(crate) const AVG_TOL: Tolerance = Tolerance {
    abs: 1e-300,
    rel: 1e-11,
};

/// Upper limit of the normalized SNR t = γ/γ̄ in fading averages; e^{-50} is negligible.
pub(crate) const T_MAX: f64 = 50.0;

/// Averages `cond(γ)` over a fading density expressed in t = γ/γ̄.
///
/// `weight(t)` is the density in t. Breakpoints are clustered around the
/// normalized SNR where the conditional probability switches from ~1 to ~0,
/// which sits near t = λ/(2Mγ̄) and moves toward 0 as γ̄ grows.
pub(crate) fn fading_average<C, W>(m: u32, lambda: f64, avg: AvgSnr, cond: C, weight: W) -> Result<f64>
where
    C: Fn(f64) -> f64,
    W: Fn(f64) -> f64,
{
    let g = avg.linear();
    let knee = lambda / (2.0 * m as f64 * g);
    let breaks = quad::breaks_around(knee, T_MAX);
    quad::integrate(|t| cond(g * t) * weight(t), &breaks, AVG_TOL)
}

/// Average missed-detection probability by quadrature over the exponential SNR density.
pub fn avg_pmd_numeric(m: u32, lambda: f64, avg: AvgSnr) -> Result<f64> {
    check_samples("avg_pmd_numeric", m)?;
    check_lambda("avg_pmd_numeric", lambda)?;
    let mf = m as f64;
    fading_average(
        m,
        lambda,
        avg,
        |gamma| specfun::reg_lower_gamma(mf, lambda / (2.0 * (1.0 + gamma))).unwrap_or(f64::NAN),
        |t| (-t).exp(),
    )
    .map(|v| v.clamp(0.0, 1.0))
}

/// Average detection probability, `1 − avg_pmd_numeric`.
pub fn avg_pd_numeric(m: u32, lambda: f64, avg: AvgSnr) -> Result<f64> {
    avg_pmd_numeric(m, lambda, avg).map(|p| 1.0 - p)
}

/// High-SNR missed detection `λ / (2 γ̄ (M − 1))`. Not clamped; exceeds 1 at low SNR.
pub fn asymptotic_pmd_single(m: u32, lambda: f64, avg: AvgSnr) -> Result<f64> {
    if m < 2 {
        return Err(Error::domain("asymptotic_pmd_single", "needs M >= 2"));
    }
    check_lambda("asymptotic_pmd_single", lambda)?;
    Ok(lambda / (2.0 * avg.linear() * (m as f64 - 1.0)))
}

/// d = 1 and A = (M − 1)/λ.
pub fn gains_single(m: u32, lambda: f64) -> Result<GainSummary> {
    if m < 2 {
        return Err(Error::domain("gains_single", "needs M >= 2"));
    }
    check_lambda("gains_single", lambda)?;
    Ok(GainSummary {
        diversity: 1.0,
        coding_gain: Some((m as f64 - 1.0) / lambda),
        selection_gain: None,
    })
}

/// Exact (quadrature) operating point of the single-user detector.
pub fn operating_point(params: &DetectorParams, avg: AvgSnr) -> Result<OperatingPoint> {
    let pf = pf_single(params.samples, params.lambda)?;
    let pmd = avg_pmd_numeric(params.samples, params.lambda, avg)?;
    Ok(OperatingPoint::from_pmd(pf, pmd, Provenance::Analytic, 0.0))
}

/// Operating point from the high-SNR expansion.
pub fn asymptotic_operating_point(params: &DetectorParams, avg: AvgSnr) -> Result<OperatingPoint> {
    let pf = pf_single(params.samples, params.lambda)?;
    let pmd = asymptotic_pmd_single(params.samples, params.lambda, avg)?;
    Ok(OperatingPoint::from_pmd(pf, pmd, Provenance::Asymptotic, 0.0))
}
