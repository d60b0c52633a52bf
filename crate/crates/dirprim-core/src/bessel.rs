//! Modified Bessel functions of the first kind, orders zero and one.
//!
//! `I₀` and `I₁` are evaluated by their power series for small arguments and
//! by the large-argument asymptotic expansion above [`SERIES_CUTOFF`]. The
//! log-domain form [`log_i0`] and the ratio [`i1_over_i0`] stay finite far
//! past the point where `I₀` itself overflows, which is what the von Mises
//! density and concentration estimation actually need at large κ.

use core::f64::consts::TAU;
use core::fmt;

#[allow(unused_imports)]
use crate::float::*;

/// Switch point between the power series and the asymptotic expansion.
pub const SERIES_CUTOFF: f64 = 15.0;

/// Above this argument `I₀(x)` is close to `f64` overflow; callers must use
/// log-domain ratios instead.
pub const OVERFLOW_LIMIT: f64 = 700.0;

const REL_EPS: f64 = 1e-17;
const MAX_TERMS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BesselError {
    /// Argument was negative or NaN.
    InvalidArgument { x: f64 },
    /// Only orders 0 and 1 are implemented.
    UnsupportedOrder { order: u32 },
    /// Argument beyond [`OVERFLOW_LIMIT`].
    Overflow { x: f64 },
}

impl fmt::Display for BesselError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidArgument { x } => write!(f, "bessel argument must be >= 0, got {x}"),
            Self::UnsupportedOrder { order } => write!(f, "unsupported bessel order {order}"),
            Self::Overflow { x } => write!(
                f,
                "I(x) overflows for x = {x} (limit {OVERFLOW_LIMIT}); use log-domain forms"
            ),
        }
    }
}

impl core::error::Error for BesselError {}

/// `I_order(x)` for `order ∈ {0, 1}` with argument checking.
pub fn bessel_i(order: u32, x: f64) -> Result<f64, BesselError> {
    if x.is_nan() || x < 0.0 {
        return Err(BesselError::InvalidArgument { x });
    }
    if x > OVERFLOW_LIMIT {
        return Err(BesselError::Overflow { x });
    }
    match order {
        0 => Ok(i0(x)),
        1 => Ok(i1(x)),
        order => Err(BesselError::UnsupportedOrder { order }),
    }
}

/// `I₀(x)` for `x ≥ 0`. Overflows to infinity near x = 710.
pub fn i0(x: f64) -> f64 {
    if x <= SERIES_CUTOFF {
        i0_series(x)
    } else {
        x.exp() * asymptotic_sum(0.0, x) / (TAU * x).sqrt()
    }
}

/// `I₁(x)` for `x ≥ 0`.
pub fn i1(x: f64) -> f64 {
    if x <= SERIES_CUTOFF {
        i1_series(x)
    } else {
        x.exp() * asymptotic_sum(4.0, x) / (TAU * x).sqrt()
    }
}

/// `ln I₀(x)`, finite for all representable `x ≥ 0`.
pub fn log_i0(x: f64) -> f64 {
    if x <= SERIES_CUTOFF {
        i0_series(x).ln()
    } else {
        x - 0.5 * (TAU * x).ln() + asymptotic_sum(0.0, x).ln()
    }
}

/// The ratio `A(x) = I₁(x)/I₀(x)`, the expected resultant length of a von
/// Mises sample at concentration `x`. Stable for all `x ≥ 0`.
pub fn i1_over_i0(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if x <= SERIES_CUTOFF {
        i1_series(x) / i0_series(x)
    } else {
        // The exponential prefactors cancel in the ratio.
        asymptotic_sum(4.0, x) / asymptotic_sum(0.0, x)
    }
}

fn i0_series(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        term *= q / (kf * kf);
        sum += term;
        if term < sum * REL_EPS {
            break;
        }
    }
    sum
}

fn i1_series(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = x / 2.0;
    let mut sum = term;
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        term *= q / (kf * (kf + 1.0));
        sum += term;
        if term < sum * REL_EPS {
            break;
        }
    }
    sum
}

/// Asymptotic series Σ (−1)^k a_k(ν) / x^k with a_k(ν) built from 4ν²,
/// truncated at its smallest term.
fn asymptotic_sum(four_nu_sq: f64, x: f64) -> f64 {
    let mut term = 1.0_f64;
    let mut sum = 1.0;
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        let two_k_minus_1 = 2.0 * kf - 1.0;
        let next = term * (two_k_minus_1 * two_k_minus_1 - four_nu_sq) / (8.0 * kf * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < sum.abs() * REL_EPS {
            break;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close_rel(a: f64, b: f64, tol: f64) {
        let scale = b.abs().max(1e-300);
        assert!((a - b).abs() / scale <= tol, "{a} vs {b} (rel tol {tol})");
    }

    // Independent oracle: I_ν(x) = (1/π) ∫₀^π e^{x cos t} cos(νt) dt, via the
    // trapezoid rule, which converges spectrally for smooth periodic
    // integrands. Evaluated in shifted form to stay finite at large x.
    fn oracle_log_i0(x: f64) -> f64 {
        let n = 8192;
        let h = core::f64::consts::PI / n as f64;
        let mut sum =
            0.5 * ((x * (0.0_f64).cos() - x).exp() + (x * core::f64::consts::PI.cos() - x).exp());
        for i in 1..n {
            let t = i as f64 * h;
            sum += (x * t.cos() - x).exp();
        }
        x + (sum * h / core::f64::consts::PI).ln()
    }

    fn oracle_i(order: u32, x: f64) -> f64 {
        let n = 8192;
        let h = core::f64::consts::PI / n as f64;
        let f = |t: f64| (x * t.cos()).exp() * (order as f64 * t).cos();
        let mut sum = 0.5 * (f(0.0) + f(core::f64::consts::PI));
        for i in 1..n {
            sum += f(i as f64 * h);
        }
        sum * h / core::f64::consts::PI
    }

    #[test]
    fn order_zero_at_zero() {
        assert_eq!(bessel_i(0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn order_one_at_zero() {
        assert_eq!(bessel_i(1, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn i0_at_two_matches_series_oracle() {
        // Frozen from the quadrature oracle (and cross-checked by the power
        // series Σ (x/2)^{2k} / (k!)² summed to convergence).
        close_rel(bessel_i(0, 2.0).unwrap(), 2.2795853023360673, 1e-12);
        close_rel(bessel_i(0, 2.0).unwrap(), oracle_i(0, 2.0), 1e-12);
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn known_values() {
        close_rel(i0(1.0), 1.2660658777520084, 1e-12);
        close_rel(i0(10.0), 2815.716628466254, 1e-12);
        close_rel(i1(2.0), 1.5906368546373291, 1e-12);
        close_rel(i0(20.0), 43558282.559553534, 1e-11);
    }

    #[test]
    fn matches_quadrature_oracle_across_range() {
        // Spans both evaluation branches on each side of SERIES_CUTOFF.
        for &x in &[
            0.1, 0.5, 1.0, 3.0, 7.5, 12.0, 14.9, 15.1, 20.0, 50.0, 120.0, 350.0, 700.0,
        ] {
            close_rel(i0(x), oracle_i(0, x), 1e-10);
            close_rel(i1(x), oracle_i(1, x), 1e-10);
        }
    }

    #[test]
    fn log_domain_matches_oracle_past_overflow() {
        for &x in &[1.0, 15.0, 200.0, 700.0, 2000.0, 1e4] {
            let got = log_i0(x);
            let want = oracle_log_i0(x);
            assert!(
                (got - want).abs() <= 1e-10 * want.abs().max(1.0),
                "x={x}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn ratio_is_consistent_and_bounded() {
        for &x in &[0.0, 0.3, 2.0, 14.9, 15.1, 80.0, 1e4] {
            let a = i1_over_i0(x);
            assert!((0.0..1.0).contains(&a), "A({x}) = {a}");
        }
        close_rel(i1_over_i0(2.0), 0.697774657964008, 1e-12);
        // Continuity across the series/asymptotic switch.
        let below = i1_over_i0(SERIES_CUTOFF - 1e-9);
        let above = i1_over_i0(SERIES_CUTOFF + 1e-9);
        assert!((below - above).abs() < 1e-10);
    }

    #[test]
    fn monotone_increasing_in_x() {
        let mut prev0 = i0(0.0);
        let mut prev1 = i1(0.0);
        let mut x = 0.05;
        while x <= 700.0 {
            let v0 = i0(x);
            let v1 = i1(x);
            assert!(v0 > prev0, "I0 not increasing at {x}");
            assert!(v1 > prev1, "I1 not increasing at {x}");
            prev0 = v0;
            prev1 = v1;
            x += 3.17;
        }
    }

    #[test]
    fn argument_errors() {
        assert_eq!(
            bessel_i(0, -1.0),
            Err(BesselError::InvalidArgument { x: -1.0 })
        );
        assert_eq!(
            bessel_i(2, 1.0),
            Err(BesselError::UnsupportedOrder { order: 2 })
        );
        assert_eq!(bessel_i(0, 701.0), Err(BesselError::Overflow { x: 701.0 }));
    }
}
