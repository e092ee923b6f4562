//! Standard normal density and distribution function, including log-space
//! forms that stay finite deep in the lower tail.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use libm::erfc;

/// ln(√(2π))
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this argument `log_cdf` switches to the asymptotic tail series.
const TAIL_SWITCH: f64 = -30.0;

#[inline]
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

#[inline]
pub fn log_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

#[inline]
pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// ln Φ(x).
pub fn log_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x > 5.0 {
        // Φ(x) = 1 − Φ(−x); keep precision in the upper tail.
        return (-0.5 * erfc(x * FRAC_1_SQRT_2)).ln_1p();
    }
    if x >= TAIL_SWITCH {
        return cdf(x).ln();
    }
    if x == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    // Mills-ratio expansion: Φ(x) ≈ φ(x)/(−x) · Σ (−1)^k (2k−1)!! / x^{2k}
    let z = 1.0 / (x * x);
    let mut term = 1.0;
    let mut series = 1.0;
    for k in 1..8 {
        term *= -((2 * k - 1) as f64) * z;
        series += term;
    }
    log_pdf(x) - (-x).ln() + series.ln()
}

/// φ(x)/Φ(x), the inverse Mills ratio, finite for all x.
#[inline]
pub fn pdf_over_cdf(x: f64) -> f64 {
    (log_pdf(x) - log_cdf(x)).exp()
}
