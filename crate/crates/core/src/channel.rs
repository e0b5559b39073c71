//! Rayleigh-faded SNR sampling and the densities of the strongest of Q states.
//!
//! SNRs are power quantities: under Rayleigh fading the instantaneous SNR is
//! exponentially distributed with mean equal to the average SNR.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Instantaneous (linear) SNR γ ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SnrValue(f64);

impl SnrValue {
    pub fn new(gamma: f64) -> Result<Self> {
        if gamma >= 0.0 && gamma.is_finite() {
            Ok(SnrValue(gamma))
        } else {
            Err(Error::domain(
                "SnrValue",
                format!("gamma = {gamma} must be finite and >= 0"),
            ))
        }
    }

    pub fn linear(self) -> f64 {
        self.0
    }
}

/// Average (linear) SNR γ̄ > 0.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct AvgSnr(f64);

impl AvgSnr {
    pub fn new(gamma_bar: f64) -> Result<Self> {
        if gamma_bar > 0.0 && gamma_bar.is_finite() {
            Ok(AvgSnr(gamma_bar))
        } else {
            Err(Error::domain(
                "AvgSnr",
                format!("gamma_bar = {gamma_bar} must be finite and > 0"),
            ))
        }
    }

    pub fn from_db(db: f64) -> Result<Self> {
        if !db.is_finite() {
            return Err(Error::domain("AvgSnr", format!("{db} dB is not finite")));
        }
        Self::new(10f64.powf(db / 10.0))
    }

    pub fn linear(self) -> f64 {
        self.0
    }

    pub fn db(self) -> f64 {
        10.0 * self.0.log10()
    }
}

/// Channel realizations γ₁..γ_Q of a reconfigurable antenna's states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateRealizations(Vec<SnrValue>);

impl StateRealizations {
    pub fn new(gammas: Vec<SnrValue>) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::domain("StateRealizations", "need at least one state"));
        }
        Ok(StateRealizations(gammas))
    }

    pub fn from_linear(gammas: &[f64]) -> Result<Self> {
        gammas
            .iter()
            .map(|&g| SnrValue::new(g))
            .collect::<Result<Vec<_>>>()
            .and_then(Self::new)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[SnrValue] {
        &self.0
    }

    pub fn max(&self) -> SnrValue {
        self.0
            .iter()
            .copied()
            .fold(SnrValue(0.0), |a, b| if b.0 > a.0 { b } else { a })
    }
}

/// Handle for one reproducible random substream.
///
/// Each `(seed, stream_id)` pair addresses an independent ChaCha8 keystream,
/// so draws depend only on the pair and never on the order in which streams
/// are consumed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RandomStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RandomStream { seed, stream_id }
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Factory that keys the cipher once and hands out per-stream generators.
#[derive(Clone)]
pub struct StreamFactory {
    base: ChaCha8Rng,
}

impl StreamFactory {
    pub fn new(seed: u64) -> Self {
        StreamFactory {
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn stream(&self, stream_id: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(stream_id);
        rng
    }
}

/// Derives a child seed from a parent seed and a label (SplitMix64 finalizer).
pub fn derive_seed(parent: u64, label: u64) -> u64 {
    let mut z = parent ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Exponential(mean γ̄) variate by inverting the CDF of a uniform draw.
#[inline]
pub fn exponential_snr<R: Rng + ?Sized>(avg: AvgSnr, rng: &mut R) -> f64 {
    // u in (0, 1] keeps the log finite
    let u: f64 = 1.0 - rng.random::<f64>();
    -avg.0 * u.ln()
}

pub fn sample_rayleigh_snr<R: Rng + ?Sized>(avg: AvgSnr, rng: &mut R) -> SnrValue {
    SnrValue(exponential_snr(avg, rng))
}

/// Q i.i.d. exponential(γ̄) state gains.
pub fn sample_states<R: Rng + ?Sized>(avg: AvgSnr, q: usize, rng: &mut R) -> Result<StateRealizations> {
    if q == 0 {
        return Err(Error::domain("sample_states", "Q must be at least 1"));
    }
    Ok(StateRealizations(
        (0..q).map(|_| sample_rayleigh_snr(avg, rng)).collect(),
    ))
}

/// Exponential SNR density (1/γ̄) e^{−γ/γ̄}.
pub fn rayleigh_snr_pdf(gamma: SnrValue, avg: AvgSnr) -> f64 {
    (-gamma.0 / avg.0).exp() / avg.0
}

/// Exact density of the largest of Q i.i.d. exponential(γ̄) gains.
pub fn max_state_pdf_exact(gamma_max: SnrValue, avg: AvgSnr, q: u32) -> f64 {
    let t = gamma_max.0 / avg.0;
    if q == 1 {
        return (-t).exp() / avg.0;
    }
    // (1 - e^{-t}) via expm1 keeps the small-t behaviour t^{Q-1}
    q as f64 / avg.0 * (-t).exp() * (-(-t).exp_m1()).powi(q as i32 - 1)
}

/// High-SNR dominant form of the max-state density, (Q/γ̄^Q) e^{−γ/γ̄} γ^{Q−1}.
///
/// Not normalized for Q > 1; it integrates to Γ(Q+1) = Q!.
pub fn max_state_pdf_dominant(gamma_max: SnrValue, avg: AvgSnr, q: u32) -> f64 {
    let t = gamma_max.0 / avg.0;
    q as f64 / avg.0 * (-t).exp() * t.powi(q as i32 - 1)
}
