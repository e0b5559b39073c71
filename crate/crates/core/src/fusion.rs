//! Cooperative sensing with hard local decisions and an n-out-of-N vote.
//!
//! Users are homogeneous (same detector, same average SNR, independent
//! fading) and report over an error-free channel.

use crate::channel::AvgSnr;
use crate::detector::{self, DetectorParams, GainSummary, OperatingPoint, Provenance};
use crate::error::{Error, Result};
use crate::roots;
use crate::specfun;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionParams {
    users: u32,
    votes: u32,
    per_user: DetectorParams,
}

impl FusionParams {
    pub fn new(users: u32, votes: u32, per_user: DetectorParams) -> Result<Self> {
        if users == 0 {
            return Err(Error::domain("FusionParams", "need at least one user"));
        }
        if votes == 0 || votes > users {
            return Err(Error::domain(
                "FusionParams",
                format!("vote threshold n = {votes} must lie in [1, {users}]"),
            ));
        }
        Ok(FusionParams { users, votes, per_user })
    }

    /// Local thresholds chosen so that the global false-alarm rate is `alpha`.
    pub fn calibrated(users: u32, votes: u32, samples: u32, alpha: f64) -> Result<Self> {
        let lambda = calibrate_local_lambda_global(users, votes, samples, alpha)?;
        Self::new(users, votes, DetectorParams::with_threshold(samples, lambda)?)
    }

    pub fn users(&self) -> u32 {
        self.users
    }

    pub fn votes(&self) -> u32 {
        self.votes
    }

    pub fn per_user(&self) -> &DetectorParams {
        &self.per_user
    }

    /// Total samples sensed across the network, N·M.
    pub fn total_samples(&self) -> u64 {
        self.users as u64 * self.per_user.samples() as u64
    }
}

fn binom_term(n: u32, l: u32, p: f64) -> f64 {
    // C(n,l) p^l (1-p)^(n-l) with exact handling of p in {0, 1}
    if p <= 0.0 {
        return if l == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if l == n { 1.0 } else { 0.0 };
    }
    let ln_c = specfun::log_binom(n as u64, l as u64).expect("l <= n");
    (ln_c + l as f64 * p.ln() + (n - l) as f64 * (-p).ln_1p()).exp()
}

/// P(at least `k` of `n` i.i.d. Bernoulli(p) successes).
pub fn binomial_upper_tail(n: u32, k: u32, p: f64) -> f64 {
    (k..=n).map(|l| binom_term(n, l, p)).sum::<f64>().min(1.0)
}

/// P(fewer than `k` of `n` successes).
pub fn binomial_lower_tail(n: u32, k: u32, p: f64) -> f64 {
    (0..k.min(n + 1)).map(|l| binom_term(n, l, p)).sum::<f64>().min(1.0)
}

/// Global false-alarm probability of the n-out-of-N rule.
pub fn global_pf(params: &FusionParams) -> Result<f64> {
    let d = params.per_user;
    let pf = detector::pf_single(d.samples(), d.lambda())?;
    Ok(binomial_upper_tail(params.users, params.votes, pf))
}

/// Global detection probability, with each user's P̄_D from exact quadrature.
pub fn global_pd(params: &FusionParams, avg: AvgSnr) -> Result<f64> {
    let d = params.per_user;
    let pmd = detector::avg_pmd_numeric(d.samples(), d.lambda(), avg)?;
    Ok(binomial_upper_tail(params.users, params.votes, 1.0 - pmd))
}

/// Global missed detection, Σ_{l<n} C(N,l) P̄_md^{N−l} (1 − P̄_md)^l.
pub fn global_pmd(params: &FusionParams, avg: AvgSnr) -> Result<f64> {
    let d = params.per_user;
    let pmd = detector::avg_pmd_numeric(d.samples(), d.lambda(), avg)?;
    Ok(global_pmd_from_local(params.users, params.votes, pmd))
}

/// Global missed detection given the local average missed-detection probability.
pub fn global_pmd_from_local(users: u32, votes: u32, local_pmd: f64) -> f64 {
    // l detections among N, l < n
    binomial_lower_tail(users, votes, 1.0 - local_pmd)
}

/// Local threshold λ such that the global false-alarm rate equals `alpha`.
pub fn calibrate_local_lambda_global(users: u32, votes: u32, samples: u32, alpha: f64) -> Result<f64> {
    const OP: &str = "calibrate_local_lambda_global";
    detector::check_alpha(OP, alpha)?;
    if users == 0 || votes == 0 || votes > users {
        return Err(Error::domain(OP, format!("need 1 <= n = {votes} <= N = {users}")));
    }
    let local_pf = local_pf_for_global(users, votes, alpha)?;
    detector::calibrate_lambda(samples, local_pf)
}

/// Local false-alarm level p with `binomial_upper_tail(N, n, p) = alpha`.
pub fn local_pf_for_global(users: u32, votes: u32, alpha: f64) -> Result<f64> {
    const OP: &str = "calibrate_local_lambda_global";
    detector::check_alpha(OP, alpha)?;
    if votes == 1 {
        // OR rule inverts in closed form
        let ln_keep = (-alpha).ln_1p() / users as f64;
        return Ok(-ln_keep.exp_m1());
    }
    roots::find_root(
        OP,
        |p| binomial_upper_tail(users, votes, p) - alpha,
        0.0,
        1.0,
        4.0 * f64::EPSILON,
    )
}

/// d = N − n + 1, A = C(N, n−1)^{1/d} (M − 1)/λ.
pub fn gains_coop(params: &FusionParams) -> Result<GainSummary> {
    let d = params.per_user;
    if d.samples() < 2 {
        return Err(Error::domain("gains_coop", "needs M >= 2"));
    }
    let order = (params.users - params.votes + 1) as f64;
    let ln_c = specfun::log_binom(params.users as u64, params.votes as u64 - 1)?;
    Ok(GainSummary {
        diversity: order,
        coding_gain: Some((ln_c / order).exp() * (d.samples() as f64 - 1.0) / d.lambda()),
        selection_gain: None,
    })
}

/// The vote threshold that maximizes diversity: n = 1, the OR rule.
pub fn diversity_maximizing_votes() -> u32 {
    1
}

/// High-SNR global missed detection `C(N, n−1) (λ/(2γ̄(M−1)))^{N−n+1}`.
pub fn asymptotic_pmd_coop(params: &FusionParams, avg: AvgSnr) -> Result<f64> {
    let d = params.per_user;
    let x = detector::asymptotic_pmd_single(d.samples(), d.lambda(), avg)?;
    let ln_c = specfun::log_binom(params.users as u64, params.votes as u64 - 1)?;
    let order = (params.users - params.votes + 1) as f64;
    Ok((ln_c + order * x.ln()).exp())
}

pub fn operating_point(params: &FusionParams, avg: AvgSnr) -> Result<OperatingPoint> {
    let pf = global_pf(params)?;
    let pmd = global_pmd(params, avg)?;
    Ok(OperatingPoint::from_pmd(pf, pmd, Provenance::Analytic, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn avg(g: f64) -> AvgSnr {
        AvgSnr::new(g).unwrap()
    }

    #[test]
    fn or_rule_and_and_rule() {
        assert!((binomial_upper_tail(2, 1, 0.1) - 0.19).abs() < 1e-15);
        assert!((binomial_upper_tail(6, 6, 0.3) - 0.3f64.powi(6)).abs() < 1e-16);
        assert_eq!(binomial_upper_tail(5, 1, 0.0), 0.0);
        assert_eq!(binomial_upper_tail(5, 3, 1.0), 1.0);
    }

    #[test]
    fn lower_tail_hand_value() {
        // N = 4, n = 2, P̄_md = 0.3: 0.3^4 + 4 · 0.3^3 · 0.7
        let v = global_pmd_from_local(4, 2, 0.3);
        assert!((v - 0.0837).abs() < 1e-15);
        assert!((global_pmd_from_local(7, 1, 0.2) - 0.2f64.powi(7)).abs() < 1e-18);
    }

    #[test]
    fn params_validation() {
        let d = DetectorParams::calibrated(10, 0.05).unwrap();
        assert!(FusionParams::new(0, 1, d).is_err());
        assert!(FusionParams::new(3, 0, d).is_err());
        assert!(FusionParams::new(3, 4, d).is_err());
        assert_eq!(FusionParams::new(3, 3, d).unwrap().total_samples(), 30);
    }

    #[test]
    fn single_user_network_degenerates() {
        let f = FusionParams::calibrated(1, 1, 10, 0.05).unwrap();
        let lambda = detector::calibrate_lambda(10, 0.05).unwrap();
        assert!((f.per_user().lambda() - lambda).abs() < 1e-9 * lambda);
        let g = avg(7.0);
        let pd = detector::avg_pd_numeric(10, f.per_user().lambda(), g).unwrap();
        assert!((global_pd(&f, g).unwrap() - pd).abs() < 1e-12);
    }

    #[test]
    fn or_rule_local_level() {
        let p = local_pf_for_global(10, 1, 0.05).unwrap();
        assert!((p - 0.005_116_2).abs() < 5e-8, "{p}");
        assert!((binomial_upper_tail(10, 1, p) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn calibrated_global_false_alarm() {
        for (n_users, votes) in [(10, 1), (10, 3), (5, 5), (12, 7)] {
            let f = FusionParams::calibrated(n_users, votes, 10, 0.05).unwrap();
            assert!((global_pf(&f).unwrap() - 0.05).abs() < 1e-9, "{n_users}/{votes}");
        }
    }

    #[test]
    fn complement_identity() {
        let f = FusionParams::calibrated(10, 3, 10, 0.05).unwrap();
        let g = avg(5.0);
        let s = global_pd(&f, g).unwrap() + global_pmd(&f, g).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
        // P_D = 1 forces global detection for any vote threshold
        assert_eq!(binomial_upper_tail(8, 5, 1.0), 1.0);
    }

    #[test]
    fn gains_and_asymptote() {
        let d = DetectorParams::with_threshold(10, 20.0).unwrap();
        let or = FusionParams::new(10, 1, d).unwrap();
        let g = gains_coop(&or).unwrap();
        assert_eq!(g.diversity, 10.0);
        assert!((g.coding_gain.unwrap() - 9.0 / 20.0).abs() < 1e-15);
        let and = FusionParams::new(5, 5, d).unwrap();
        assert_eq!(gains_coop(&and).unwrap().diversity, 1.0);

        let two = FusionParams::new(2, 1, d).unwrap();
        let x = detector::asymptotic_pmd_single(10, 20.0, avg(50.0)).unwrap();
        assert!((asymptotic_pmd_coop(&two, avg(50.0)).unwrap() - x * x).abs() < 1e-15);
        // factor 10^{N-n+1} per decade of SNR
        let three = FusionParams::new(5, 3, d).unwrap();
        let r = asymptotic_pmd_coop(&three, avg(10.0)).unwrap() / asymptotic_pmd_coop(&three, avg(100.0)).unwrap();
        assert!((r / 1e3 - 1.0).abs() < 1e-12);
        assert_eq!(diversity_maximizing_votes(), 1);
    }
}
