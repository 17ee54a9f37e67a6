//! Special functions needed by the singular-integral kernels.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

// B_{2j} / (2j)! for j = 1..=8
const BERNOULLI_OVER_FACTORIAL: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
    -3617.0 / 10670622842880000.0,
];

/// Hurwitz zeta function `sum_{j>=0} (a + j)^{-s}` for `s > 1`, `a > 0`.
///
/// Direct summation of the first terms followed by an Euler-Maclaurin tail;
/// accurate to a few ulps for the `s` in (1, 2) range used by the kernels.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    debug_assert!(s > 1.0 && a > 0.0);
    const DIRECT: usize = 12;
    let mut sum = 0.0;
    for j in 0..DIRECT {
        sum += (a + j as f64).powf(-s);
    }
    let big = a + DIRECT as f64;
    sum += big.powf(1.0 - s) / (s - 1.0) + 0.5 * big.powf(-s);
    // rising factorial s (s+1) ... (s+2j-2) times big^{-s-2j+1}
    let mut rising = s;
    let mut power = big.powf(-s - 1.0);
    for (j, coef) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        sum += coef * rising * power;
        let m = 2.0 * j as f64;
        rising *= (s + m + 1.0) * (s + m + 2.0);
        power /= big * big;
    }
    sum
}

/// Kernel `|y|^{-1-alpha}` summed over all periodic images `y + jP`, for `y` in (0, P).
pub fn periodized_kernel(y: f64, period: f64, alpha: f64) -> f64 {
    let s = 1.0 + alpha;
    let u = y / period;
    period.powf(-s) * (hurwitz_zeta(s, u) + hurwitz_zeta(s, 1.0 - u))
}

/// Closed-form normalization of the one-dimensional first-difference kernel:
/// `integral (e^{i y xi} - 1) |y|^{-1-alpha} dy = c(alpha) |xi|^alpha` with
/// `c(alpha) = sqrt(pi) 2^{-alpha} Gamma(-alpha/2) / Gamma((1+alpha)/2)`.
///
/// Negative for every alpha in (0, 2).
pub fn stein_constant(alpha: f64) -> f64 {
    PI.sqrt() * 2f64.powf(-alpha) * gamma(-alpha / 2.0) / gamma((1.0 + alpha) / 2.0)
}
