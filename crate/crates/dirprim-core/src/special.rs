//! Gamma-family special functions: `ln Γ`, digamma, trigamma.
//!
//! Only the positive real axis is needed here (gamma shapes and speeds are
//! positive), but the reflection formulas are kept so the functions behave
//! over the full domain.

use core::f64::consts::PI;

#[allow(unused_imports)]
use crate::float::*;

// Lanczos approximation, g = 7, 9 terms.
const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const HALF_LN_TAU: f64 = 0.918_938_533_204_672_7;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Natural log of the gamma function.
pub fn ln_gamma(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.5 {
        // Reflection: Γ(x) Γ(1−x) = π / sin(πx).
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut a = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    HALF_LN_TAU + (z + 0.5) * t.ln() - t + a.ln()
}

/// Digamma ψ(x): recurrence up to the asymptotic regime, then the Bernoulli
/// series.
pub fn digamma(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 && x == x.floor() {
        return f64::NEG_INFINITY;
    }
    if x < 0.0 {
        return digamma(1.0 - x) - PI / (PI * x).tan();
    }
    if x <= 1e-6 {
        #[allow(clippy::excessive_precision)]
        return -EULER_GAMMA - 1.0 / x + 1.644_934_066_848_226_44 * x;
    }
    let mut result = 0.0;
    let mut z = x;
    while z < 12.0 {
        result -= 1.0 / z;
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    result += z.ln()
        - 0.5 * inv
        - inv2
            * (1.0 / 12.0
                - inv2
                    * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))));
    result
}

/// Trigamma ψ′(x), the derivative of [`digamma`].
pub fn trigamma(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 && x == x.floor() {
        return f64::INFINITY;
    }
    if x < 0.0 {
        let s = (PI * x).sin();
        return -trigamma(1.0 - x) + PI * PI / (s * s);
    }
    let mut result = 0.0;
    let mut z = x;
    while z < 12.0 {
        result += 1.0 / (z * z);
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    result
        + inv
            * (1.0
                + inv
                    * (0.5
                        + inv
                            * (1.0 / 6.0
                                - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 / 30.0)))))
}
