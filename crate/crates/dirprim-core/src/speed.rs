//! Gamma distributions over nonnegative speeds.
//!
//! Each directional mode carries a gamma speed model with shape α and rate β
//! (density `β^α / Γ(α) · s^{α−1} e^{−βs}`, mean α/β, variance α/β²).
//! Fitting maximizes the likelihood: α solves
//! `ln α − ψ(α) = ln s̄ − mean(ln s)` by safeguarded Newton iteration and
//! β = α / s̄, so the fitted mean matches the sample mean exactly.

use core::fmt;

use rand::Rng;

use crate::special::{digamma, ln_gamma, trigamma};

#[allow(unused_imports)]
use crate::float::*;

/// Fewer qualifying samples than this and no gamma model is fitted.
pub const MIN_SPEED_SAMPLES: usize = 5;

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaError {
    InvalidShape {
        alpha: f64,
    },
    InvalidRate {
        beta: f64,
    },
    NegativeSpeed {
        speed: f64,
    },
    TooFewSamples {
        got: usize,
        need: usize,
    },
    /// Samples carry no usable spread (constant data, or zeros that make the
    /// log-moment undefined).
    DegenerateData,
    DidNotConverge,
}

impl fmt::Display for GammaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidShape { alpha } => write!(f, "shape must be finite and > 0, got {alpha}"),
            Self::InvalidRate { beta } => write!(f, "rate must be finite and > 0, got {beta}"),
            Self::NegativeSpeed { speed } => write!(f, "speed must be >= 0, got {speed}"),
            Self::TooFewSamples { got, need } => {
                write!(f, "need at least {need} samples, got {got}")
            }
            Self::DegenerateData => write!(f, "samples are degenerate (no spread)"),
            Self::DidNotConverge => write!(f, "likelihood maximization did not converge"),
        }
    }
}

impl core::error::Error for GammaError {}

/// Shape/rate parameters of a gamma speed distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaParams {
    alpha: f64,
    beta: f64,
}

impl GammaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, GammaError> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(GammaError::InvalidShape { alpha });
        }
        if !beta.is_finite() || beta <= 0.0 {
            return Err(GammaError::InvalidRate { beta });
        }
        Ok(GammaParams { alpha, beta })
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Mean α/β in m/s.
    pub fn mean(&self) -> f64 {
        self.alpha / self.beta
    }

    /// Variance α/β² in (m/s)².
    pub fn variance(&self) -> f64 {
        self.alpha / (self.beta * self.beta)
    }

    /// Density at speed `s`. At `s = 0` the density is β for α = 1, zero for
    /// α > 1, and +∞ for α < 1 (callers work in log space around the pole).
    pub fn pdf(&self, s: f64) -> Result<f64, GammaError> {
        if s.is_nan() || s < 0.0 {
            return Err(GammaError::NegativeSpeed { speed: s });
        }
        if s == 0.0 {
            return Ok(if self.alpha < 1.0 {
                f64::INFINITY
            } else if self.alpha == 1.0 {
                self.beta
            } else {
                0.0
            });
        }
        Ok(self.log_pdf_unchecked(s).exp())
    }

    pub fn log_pdf(&self, s: f64) -> Result<f64, GammaError> {
        if s.is_nan() || s < 0.0 {
            return Err(GammaError::NegativeSpeed { speed: s });
        }
        if s == 0.0 {
            return Ok(if self.alpha < 1.0 {
                f64::INFINITY
            } else if self.alpha == 1.0 {
                self.beta.ln()
            } else {
                f64::NEG_INFINITY
            });
        }
        Ok(self.log_pdf_unchecked(s))
    }

    fn log_pdf_unchecked(&self, s: f64) -> f64 {
        self.alpha * self.beta.ln() - ln_gamma(self.alpha) + (self.alpha - 1.0) * s.ln()
            - self.beta * s
    }

    /// Sum of log densities over a sample.
    pub fn log_likelihood(&self, samples: &[f64]) -> Result<f64, GammaError> {
        let mut total = 0.0;
        for &s in samples {
            total += self.log_pdf(s)?;
        }
        Ok(total)
    }

    /// Exact gamma draw (Marsaglia–Tsang), deterministic for a fixed
    /// generator state.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.alpha < 1.0 {
            // Boost: Gamma(α) = Gamma(α+1) · U^{1/α}.
            let inner = GammaParams {
                alpha: self.alpha + 1.0,
                beta: self.beta,
            };
            let g = inner.sample(rng);
            let u = loop {
                let u: f64 = rng.gen();
                if u > 0.0 {
                    break u;
                }
            };
            return g * u.powf(1.0 / self.alpha);
        }
        let d = self.alpha - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = standard_normal(rng);
            let t = 1.0 + c * x;
            if t <= 0.0 {
                continue;
            }
            let v = t * t * t;
            let u: f64 = rng.gen();
            if u < 1.0 - 0.0331 * x * x * x * x {
                return d * v / self.beta;
            }
            if u > 0.0 && u.ln() < 0.5 * x * x + d * (1.0 - v + v.ln()) {
                return d * v / self.beta;
            }
        }
    }
}

/// Standard normal draw by the Marsaglia polar method.
fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u = 2.0 * rng.gen::<f64>() - 1.0;
        let v = 2.0 * rng.gen::<f64>() - 1.0;
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            return u * (-2.0 * s.ln() / s).sqrt();
        }
    }
}

/// Maximum-likelihood gamma fit.
///
/// Newton iteration on `f(α) = ln α − ψ(α) − c` with `c = ln s̄ − mean(ln s)`,
/// seeded by the moment estimate `s̄²/var` and safeguarded by bisection
/// against the bracket `f(lo) > 0 > f(hi)`.
pub fn mle(samples: &[f64]) -> Result<GammaParams, GammaError> {
    if samples.len() < MIN_SPEED_SAMPLES {
        return Err(GammaError::TooFewSamples {
            got: samples.len(),
            need: MIN_SPEED_SAMPLES,
        });
    }
    let n = samples.len() as f64;
    let mut sum = 0.0;
    let mut sum_ln = 0.0;
    for &s in samples {
        if s.is_nan() || s < 0.0 {
            return Err(GammaError::NegativeSpeed { speed: s });
        }
        sum += s;
        sum_ln += s.ln();
    }
    let mean = sum / n;
    let c = mean.ln() - sum_ln / n;
    // c ≥ 0 by Jensen; zero means constant data, infinite means zeros.
    if !c.is_finite() || c <= 1e-12 {
        return Err(GammaError::DegenerateData);
    }

    let f = |alpha: f64| alpha.ln() - digamma(alpha) - c;

    // f is strictly decreasing from +∞ (α → 0) to 0 (α → ∞); bracket the root.
    let mut alpha = method_of_moments(samples)
        .map(|p| p.alpha)
        .unwrap_or(0.5 / c);
    let mut lo = alpha;
    while f(lo) < 0.0 {
        lo /= 2.0;
        if lo < 1e-300 {
            return Err(GammaError::DidNotConverge);
        }
    }
    let mut hi = alpha.max(lo * 2.0);
    while f(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(GammaError::DidNotConverge);
        }
    }
    alpha = alpha.clamp(lo, hi);

    let mut converged = false;
    for _ in 0..NEWTON_MAX_ITER {
        let fa = f(alpha);
        if fa.abs() <= NEWTON_TOL {
            converged = true;
            break;
        }
        if fa > 0.0 {
            lo = alpha;
        } else {
            hi = alpha;
        }
        let deriv = 1.0 / alpha - trigamma(alpha);
        let mut next = alpha - fa / deriv;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        alpha = next;
    }
    if !converged {
        return Err(GammaError::DidNotConverge);
    }
    GammaParams::new(alpha, alpha / mean)
}

/// Moment-matching fit: `α = s̄²/var`, `β = s̄/var`. The fallback when the
/// likelihood fit is not viable.
pub fn method_of_moments(samples: &[f64]) -> Result<GammaParams, GammaError> {
    if samples.len() < 2 {
        return Err(GammaError::TooFewSamples {
            got: samples.len(),
            need: 2,
        });
    }
    let n = samples.len() as f64;
    let mut sum = 0.0;
    for &s in samples {
        if s.is_nan() || s < 0.0 {
            return Err(GammaError::NegativeSpeed { speed: s });
        }
        sum += s;
    }
    let mean = sum / n;
    let var = samples
        .iter()
        .map(|&s| (s - mean) * (s - mean))
        .sum::<f64>()
        / n;
    if var <= 0.0 || mean <= 0.0 {
        return Err(GammaError::DegenerateData);
    }
    GammaParams::new(mean * mean / var, mean / var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn exponential_density_at_origin() {
        let p = GammaParams::new(1.0, 1.0).unwrap();
        close(p.pdf(0.0).unwrap(), 1.0, 0.0);
    }

    #[test]
    fn shape_two_reference_value() {
        let p = GammaParams::new(2.0, 1.0).unwrap();
        close(p.pdf(1.0).unwrap(), 0.36787944117144233, 1e-14);
    }

    #[test]
    fn negative_speed_is_an_error() {
        let p = GammaParams::new(2.0, 1.0).unwrap();
        assert_eq!(p.pdf(-1.0), Err(GammaError::NegativeSpeed { speed: -1.0 }));
    }

    #[test]
    fn origin_pole_for_small_shapes() {
        let p = GammaParams::new(0.5, 1.0).unwrap();
        assert_eq!(p.pdf(0.0).unwrap(), f64::INFINITY);
        let q = GammaParams::new(3.0, 1.0).unwrap();
        assert_eq!(q.pdf(0.0).unwrap(), 0.0);
    }

    #[test]
    fn moments() {
        let p = GammaParams::new(1.0, 1.0).unwrap();
        close(p.mean(), 1.0, 0.0);
        close(p.variance(), 1.0, 0.0);
        let p = GammaParams::new(4.0, 2.0).unwrap();
        close(p.mean(), 2.0, 0.0);
        close(p.variance(), 1.0, 0.0);
        let p = GammaParams::new(9.0, 3.0).unwrap();
        close(p.mean(), 3.0, 0.0);
        close(p.variance(), 1.0, 0.0);
    }

    #[test]
    fn parameter_validation() {
        assert!(GammaParams::new(0.0, 1.0).is_err());
        assert!(GammaParams::new(1.0, -1.0).is_err());
        assert!(GammaParams::new(f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn mle_recovers_known_parameters() {
        let truth = GammaParams::new(4.0, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let samples: Vec<f64> = (0..10_000).map(|_| truth.sample(&mut rng)).collect();
        let fit = mle(&samples).unwrap();
        assert!(
            (fit.alpha() - 4.0).abs() / 4.0 < 0.05,
            "alpha = {}",
            fit.alpha()
        );
        assert!(
            (fit.beta() - 2.0).abs() / 2.0 < 0.05,
            "beta = {}",
            fit.beta()
        );
        // The fitted mean matches the sample mean exactly by construction.
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        close(fit.mean(), mean, 1e-9 * mean);
    }

    #[test]
    fn constant_samples_are_degenerate() {
        assert_eq!(
            mle(&[3.0, 3.0, 3.0, 3.0, 3.0, 3.0]),
            Err(GammaError::DegenerateData)
        );
    }

    #[test]
    fn too_few_samples() {
        assert_eq!(
            mle(&[1.0, 2.0, 3.0]),
            Err(GammaError::TooFewSamples {
                got: 3,
                need: MIN_SPEED_SAMPLES
            })
        );
    }

    #[test]
    fn negative_sample_rejected() {
        assert_eq!(
            mle(&[1.0, 2.0, -3.0, 4.0, 5.0]),
            Err(GammaError::NegativeSpeed { speed: -3.0 })
        );
    }

    #[test]
    fn first_moment_matching_is_exact() {
        // {1, 2, 3} padded to the minimum count; β = α / mean exactly.
        let fit = mle(&[1.0, 2.0, 3.0, 1.0, 2.0, 3.0]).unwrap();
        close(fit.mean(), 2.0, 1e-12);
    }

    #[test]
    fn sampler_moments_match() {
        let p = GammaParams::new(4.0, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 100_000;
        let samples: Vec<f64> = (0..n).map(|_| p.sample(&mut rng)).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n as f64;
        close(mean, 2.0, 0.02);
        close(var, 1.0, 0.05);
        assert!(samples.iter().all(|&s| s >= 0.0));
    }

    #[test]
    fn sampler_small_shape_boost() {
        let p = GammaParams::new(0.7, 1.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let mean = (0..n).map(|_| p.sample(&mut rng)).sum::<f64>() / n as f64;
        close(mean, 0.7 / 1.5, 0.01);
    }

    #[test]
    fn sampler_is_deterministic() {
        let p = GammaParams::new(4.0, 2.0).unwrap();
        let draw = |seed: u64| -> Vec<u64> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..32).map(|_| p.sample(&mut rng).to_bits()).collect()
        };
        assert_eq!(draw(5), draw(5));
        assert_ne!(draw(5), draw(6));
    }

    #[test]
    fn mle_beats_moment_matching_in_likelihood() {
        let truth = GammaParams::new(2.5, 0.8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let samples: Vec<f64> = (0..2_000).map(|_| truth.sample(&mut rng)).collect();
        let ml = mle(&samples).unwrap();
        let mm = method_of_moments(&samples).unwrap();
        let ll_ml = ml.log_likelihood(&samples).unwrap();
        let ll_mm = mm.log_likelihood(&samples).unwrap();
        assert!(ll_ml >= ll_mm - 1e-9, "{ll_ml} < {ll_mm}");
    }
}
