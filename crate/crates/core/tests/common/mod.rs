//! Reference implementations used as test oracles. They share no code with
//! the library: plain composite Simpson rules, bisection, finite sums.
#![allow(dead_code)]

use num_bigint::BigUint;

/// Composite Simpson rule with `n` (rounded up to even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    s * h / 3.0
}

/// Simpson over consecutive pieces `[p0, p1], [p1, p2], ...`.
pub fn simpson_pieces<F: Fn(f64) -> f64>(f: F, pts: &[f64], n: usize) -> f64 {
    pts.windows(2).map(|w| simpson(&f, w[0], w[1], n)).sum()
}

/// Bisection for an increasing or decreasing `f` with a sign change on [lo, hi].
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Regularized upper incomplete gamma for integer order through its
/// Poisson-sum form Q(m, x) = e^{−x} Σ_{k<m} x^k / k!.
pub fn poisson_upper(m: u32, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..m {
        term *= x / k as f64;
        sum += term;
    }
    (-x).exp() * sum
}

pub fn poisson_lower(m: u32, x: f64) -> f64 {
    1.0 - poisson_upper(m, x)
}

/// K_n(x) = ∫₀^∞ e^{−x cosh t} cosh(nt) dt.
pub fn bessel_k_integral(n: u32, x: f64) -> f64 {
    // integrand below e^{-60} beyond t_max
    let mut t_max: f64 = 1.0;
    while x * t_max.cosh() - n as f64 * t_max < 60.0 {
        t_max += 0.5;
    }
    simpson(|t| (-x * t.cosh()).exp() * (n as f64 * t).cosh(), 0.0, t_max, 20_000)
}

/// Rows 0..=n of Pascal's triangle in exact integers.
pub fn pascal(n: usize) -> Vec<Vec<BigUint>> {
    let mut rows: Vec<Vec<BigUint>> = vec![vec![BigUint::from(1u32)]];
    for r in 1..=n {
        let prev = &rows[r - 1];
        let mut row = vec![BigUint::from(1u32)];
        for k in 1..r {
            row.push(&prev[k - 1] + &prev[k]);
        }
        row.push(BigUint::from(1u32));
        rows.push(row);
    }
    rows
}

/// All compositions of `m` into `q` positive parts.
pub fn compositions(m: u32, q: u32) -> Vec<Vec<u32>> {
    if q == 1 {
        return if m >= 1 { vec![vec![m]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 1..m {
        for mut rest in compositions(m - first, q - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// P(at least `k` successes) by enumerating every decision vector of `n` users.
pub fn enumerate_at_least(n: u32, k: u32, p: f64) -> f64 {
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        let ones = mask.count_ones();
        if ones >= k {
            total += p.powi(ones as i32) * (1.0 - p).powi((n - ones) as i32);
        }
    }
    total
}

/// Fading-averaged missed detection by Simpson integration in t = γ/γ̄.
pub fn avg_pmd_simpson(m: u32, lambda: f64, avg: f64) -> f64 {
    let knee = lambda / (2.0 * m as f64 * avg);
    let mut pts = vec![0.0];
    let mut p = knee / 256.0;
    while p < 50.0 {
        pts.push(p);
        p *= 4.0;
    }
    pts.push(50.0);
    simpson_pieces(
        |t| poisson_lower(m, lambda / (2.0 * (1.0 + avg * t))) * (-t).exp(),
        &pts,
        2000,
    )
}

/// z-score of an empirical frequency against a reference probability.
pub fn z_score(events: u64, trials: u64, p: f64) -> f64 {
    let v = events as f64 / trials as f64;
    (v - p) / (p * (1.0 - p) / trials as f64).sqrt()
}
