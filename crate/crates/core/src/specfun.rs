//! Special functions used by the detection formulas.
//!
//! Everything here works on `f64`, returns [`Result`] for domain violations
//! and keeps ratios of gamma functions in the log domain, since sample
//! counts in the hundreds are routine.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::roots;

/// Euler–Mascheroni constant, −ψ(1).
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const EPS: f64 = 1e-16;
const INC_GAMMA_MAX_ITER: usize = 100_000;

fn check_finite(op: &'static str, name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(op, format!("{name} = {v} is not finite")))
    }
}

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

// B_{2k} / (2k (2k - 1)) for the Stirling series.
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

fn ln_gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        return ln_gamma_unchecked(x + 1.0) - x.ln();
    }
    if x >= 10.0 {
        let inv = 1.0 / x;
        let inv2 = inv * inv;
        let mut corr = 0.0;
        let mut pow = inv;
        for c in STIRLING {
            corr += c * pow;
            pow *= inv2;
        }
        return (x - 0.5) * x.ln() - x + LN_SQRT_2PI + corr;
    }
    let z = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    check_finite("ln_gamma", "x", x)?;
    if x <= 0.0 {
        return Err(Error::domain("ln_gamma", format!("x = {x} must be positive")));
    }
    // integers up to 20 are exact factorials
    if x.fract() == 0.0 && x <= 21.0 {
        let mut f = 1.0f64;
        for k in 2..(x as u32) {
            f *= k as f64;
        }
        return Ok(f.ln());
    }
    Ok(ln_gamma_unchecked(x))
}

fn check_inc_gamma_args(op: &'static str, s: f64, x: f64) -> Result<()> {
    check_finite(op, "s", s)?;
    if x.is_nan() {
        return Err(Error::domain(op, "x is NaN"));
    }
    if s <= 0.0 {
        return Err(Error::domain(op, format!("shape s = {s} must be positive")));
    }
    if x < 0.0 {
        return Err(Error::domain(op, format!("x = {x} must be non-negative")));
    }
    Ok(())
}

/// Returns `(P(s,x), Q(s,x))`, computing the smaller-cancellation one directly.
fn inc_gamma_pair(op: &'static str, s: f64, x: f64) -> Result<(f64, f64)> {
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    if x.is_infinite() {
        return Ok((1.0, 0.0));
    }
    let ln_prefix = s * x.ln() - x - ln_gamma_unchecked(s);
    if x < s + 1.0 {
        // P(s,x) = x^s e^-x / Γ(s+1) · Σ x^n / ((s+1)…(s+n))
        let mut term = 1.0 / s;
        let mut sum = term;
        let mut a = s;
        for _ in 0..INC_GAMMA_MAX_ITER {
            a += 1.0;
            term *= x / a;
            sum += term;
            if term.abs() < sum.abs() * EPS {
                let p = (ln_prefix + sum.ln()).exp().min(1.0);
                return Ok((p, 1.0 - p));
            }
        }
        Err(Error::NonConvergence {
            op,
            iterations: INC_GAMMA_MAX_ITER,
        })
    } else {
        // Q(s,x) by the Legendre continued fraction, modified Lentz.
        let tiny = 1e-300;
        let mut b = x + 1.0 - s;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..INC_GAMMA_MAX_ITER {
            let an = -(i as f64) * (i as f64 - s);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < EPS {
                let q = (ln_prefix + h.ln()).exp().min(1.0);
                return Ok((1.0 - q, q));
            }
        }
        Err(Error::NonConvergence {
            op,
            iterations: INC_GAMMA_MAX_ITER,
        })
    }
}

/// Regularized upper incomplete gamma function `Q(s, x) = Γ(s, x) / Γ(s)`.
pub fn reg_upper_gamma(s: f64, x: f64) -> Result<f64> {
    check_inc_gamma_args("reg_upper_gamma", s, x)?;
    Ok(inc_gamma_pair("reg_upper_gamma", s, x)?.1)
}

/// Regularized lower incomplete gamma function `P(s, x) = γ(s, x) / Γ(s)`.
pub fn reg_lower_gamma(s: f64, x: f64) -> Result<f64> {
    check_inc_gamma_args("reg_lower_gamma", s, x)?;
    Ok(inc_gamma_pair("reg_lower_gamma", s, x)?.0)
}

/// Solves `Q(s, x) = p` for `x`.
pub fn inv_reg_upper_gamma(s: f64, p: f64) -> Result<f64> {
    const OP: &str = "inv_reg_upper_gamma";
    check_finite(OP, "s", s)?;
    if s <= 0.0 {
        return Err(Error::domain(OP, format!("shape s = {s} must be positive")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(OP, format!("p = {p} must lie in (0, 1)")));
    }
    let f = |x: f64| inc_gamma_pair(OP, s, x).map(|(_, q)| q - p).unwrap_or(f64::NAN);
    let lo = 0.0;
    let mut hi = s.max(1.0);
    let mut doublings = 0;
    while f(hi) > 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 1100 {
            return Err(Error::NonConvergence {
                op: OP,
                iterations: doublings,
            });
        }
    }
    roots::find_root(OP, f, lo, hi, 4.0 * f64::EPSILON)
}

fn bessel_k01_series(x: f64) -> (f64, f64) {
    let t = 0.25 * x * x;
    let ln_half = (0.5 * x).ln();
    // ψ(k+1) = -γ + H_k
    let mut psi_k1 = -EULER_GAMMA; // ψ(k+1)
    let mut psi_k2 = 1.0 - EULER_GAMMA; // ψ(k+2)
    let mut i0 = 0.0;
    let mut i1 = 0.0;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut term0 = 1.0; // t^k / (k!)^2
    let mut term1 = 1.0; // t^k / (k! (k+1)!)
    for k in 0..500 {
        let kf = k as f64;
        if k > 0 {
            term0 *= t / (kf * kf);
            term1 *= t / (kf * (kf + 1.0));
            psi_k1 += 1.0 / kf;
            psi_k2 += 1.0 / (kf + 1.0);
        }
        i0 += term0;
        i1 += term1;
        s0 += psi_k1 * term0;
        s1 += (psi_k1 + psi_k2) * term1;
        if term0 < EPS * i0.abs() && term1 < EPS * i1.abs() {
            break;
        }
    }
    let i1 = 0.5 * x * i1;
    let k0 = -ln_half * i0 + s0;
    let k1 = 1.0 / x + ln_half * i1 - 0.25 * x * s1;
    (k0, k1)
}

/// `(ln K0(x), ln K1(x))` for `x >= 2` by Steed's continued fraction.
fn ln_bessel_k01_cf(x: f64) -> Result<(f64, f64)> {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            let h = a1 * h;
            let ln_k0 = 0.5 * (PI / (2.0 * x)).ln() - x - s.ln();
            let ln_k1 = ln_k0 + ((x + 0.5 - h) / x).ln();
            return Ok((ln_k0, ln_k1));
        }
    }
    Err(Error::NonConvergence {
        op: "bessel_k_int",
        iterations: 10_000,
    })
}

/// Large-argument expansion of ln K_ν(x).
fn ln_bessel_k_asymptotic(order: f64, x: f64) -> f64 {
    let mu = 4.0 * order * order;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        let next = term * (mu - odd * odd) / (8.0 * kf * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < EPS * sum.abs() {
            break;
        }
    }
    0.5 * (PI / (2.0 * x)).ln() - x + sum.ln()
}

/// Natural log of the modified Bessel function of the second kind, `ln K_M(x)`.
///
/// Stays finite where `K_M(x)` itself would overflow (large order, small
/// argument) or underflow (large argument).
pub fn ln_bessel_k_int(order: u32, x: f64) -> Result<f64> {
    const OP: &str = "bessel_k_int";
    check_finite(OP, "x", x)?;
    if x <= 0.0 {
        return Err(Error::domain(OP, format!("x = {x} must be positive")));
    }
    let m = order as f64;
    if x > 35.0 * m.sqrt().max(1.0) {
        return Ok(ln_bessel_k_asymptotic(m, x));
    }
    let (ln_k0, ln_k1) = if x <= 2.0 {
        let (k0, k1) = bessel_k01_series(x);
        (k0.ln(), k1.ln())
    } else {
        ln_bessel_k01_cf(x)?
    };
    match order {
        0 => Ok(ln_k0),
        1 => Ok(ln_k1),
        _ => {
            // K_{m+1} = K_{m-1} + (2m/x) K_m, carried as ratios K_m / K_{m-1}
            let mut ratio = (ln_k1 - ln_k0).exp();
            let mut ln_k = ln_k1;
            for j in 1..order {
                let next = 1.0 / ratio + 2.0 * j as f64 / x;
                ln_k += next.ln();
                ratio = next;
            }
            Ok(ln_k)
        }
    }
}

/// Modified Bessel function of the second kind of integer order, `K_M(x)`.
pub fn bessel_k_int(order: u32, x: f64) -> Result<f64> {
    ln_bessel_k_int(order, x).map(f64::exp)
}

/// Generalized hypergeometric function ₁F₂(a; b1, b2; z) by direct summation.
pub fn hypergeom_1f2(a: f64, b1: f64, b2: f64, z: f64) -> Result<f64> {
    const OP: &str = "hypergeom_1f2";
    const MAX_TERMS: usize = 10_000;
    for (name, v) in [("a", a), ("b1", b1), ("b2", b2), ("z", z)] {
        check_finite(OP, name, v)?;
    }
    for (name, b) in [("b1", b1), ("b2", b2)] {
        if b <= 0.0 && b.fract() == 0.0 {
            return Err(Error::domain(OP, format!("{name} = {b} is a non-positive integer")));
        }
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..MAX_TERMS {
        let kf = k as f64;
        term *= (a + kf) / ((b1 + kf) * (b2 + kf)) * z / (kf + 1.0);
        sum += term;
        if term == 0.0 || term.abs() < 1e-14 * sum.abs() {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergence {
        op: OP,
        iterations: MAX_TERMS,
    })
}

/// Q-th harmonic number, summed in increasing order.
pub fn harmonic(q: u64) -> f64 {
    (1..=q).fold(0.0, |acc, k| acc + 1.0 / k as f64)
}

/// ln C(n, k).
///
/// Exact integer arithmetic is used while the coefficient fits in `u128`
/// (always true for `n <= 60`), so `exp` of the result is good to an ulp or two.
pub fn log_binom(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(Error::domain("log_binom", format!("k = {k} exceeds n = {n}")));
    }
    let k = k.min(n - k);
    if let Some(c) = binom_exact(n, k) {
        return Ok((c as f64).ln());
    }
    Ok(ln_gamma_unchecked(n as f64 + 1.0)
        - ln_gamma_unchecked(k as f64 + 1.0)
        - ln_gamma_unchecked((n - k) as f64 + 1.0))
}

fn binom_exact(n: u64, k: u64) -> Option<u128> {
    let mut c: u128 = 1;
    for i in 0..k {
        // c * (n - i) is divisible by (i + 1) at every step
        c = c.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(c)
}
