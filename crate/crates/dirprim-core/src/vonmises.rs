//! Von Mises components and mixtures over heading angles.
//!
//! A cell's directional prior is `p(θ) = Σ_m w_m · VM(θ; μ_m, κ_m)` with
//! `VM(θ; μ, κ) = exp(κ cos(θ − μ)) / (2π I₀(κ))`. κ = 0 is the uniform
//! circle. Densities switch to the log domain at large κ so that saturated
//! concentrations (capped at [`KAPPA_MAX`]) stay finite.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};
use core::fmt;

use rand::Rng;

use crate::angle::Angle;
use crate::bessel;

#[allow(unused_imports)]
use crate::float::*;

/// Upper cap on concentrations. Near-degenerate samples (all angles equal)
/// would otherwise drive κ → ∞ and produce unserializable parameters.
pub const KAPPA_MAX: f64 = 1e4;

/// Resultant lengths at or above this saturate [`kappa_from_rbar`] at
/// [`KAPPA_MAX`].
pub const RBAR_CAP: f64 = 0.99999;

/// Mixture weights must sum to one within this tolerance.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Densities use `exp(log_pdf)` above this κ to avoid overflowing `I₀`.
const LOG_DOMAIN_KAPPA: f64 = 50.0;

const LN_TAU: f64 = 1.837_877_066_409_345_6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VonMisesError {
    InvalidKappa { kappa: f64 },
    InvalidRbar { rbar: f64 },
    EmptyMixture,
    LengthMismatch { components: usize, weights: usize },
    InvalidWeight { index: usize, weight: f64 },
    WeightSum { sum: f64 },
}

impl fmt::Display for VonMisesError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidKappa { kappa } => {
                write!(f, "kappa must be in [0, {KAPPA_MAX}], got {kappa}")
            }
            Self::InvalidRbar { rbar } => write!(f, "rbar must be in [0, 1], got {rbar}"),
            Self::EmptyMixture => write!(f, "mixture needs at least one component"),
            Self::LengthMismatch {
                components,
                weights,
            } => {
                write!(f, "{components} components but {weights} weights")
            }
            Self::InvalidWeight { index, weight } => {
                write!(f, "weight {index} must be > 0, got {weight}")
            }
            Self::WeightSum { sum } => {
                write!(
                    f,
                    "weights must sum to 1 within {WEIGHT_SUM_TOL}, got {sum}"
                )
            }
        }
    }
}

impl core::error::Error for VonMisesError {}

/// One von Mises mode: mean direction μ and concentration κ ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VonMisesComponent {
    mu: Angle,
    kappa: f64,
}

impl VonMisesComponent {
    pub fn new(mu: Angle, kappa: f64) -> Result<Self, VonMisesError> {
        if !kappa.is_finite() || !(0.0..=KAPPA_MAX).contains(&kappa) {
            return Err(VonMisesError::InvalidKappa { kappa });
        }
        Ok(VonMisesComponent { mu, kappa })
    }

    #[inline]
    pub fn mu(&self) -> Angle {
        self.mu
    }

    #[inline]
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Density at `theta`, in probability per radian.
    pub fn pdf(&self, theta: Angle) -> f64 {
        if self.kappa == 0.0 {
            1.0 / TAU
        } else if self.kappa <= LOG_DOMAIN_KAPPA {
            (self.kappa * (theta.radians() - self.mu.radians()).cos()).exp()
                / (TAU * bessel::i0(self.kappa))
        } else {
            self.log_pdf(theta).exp()
        }
    }

    pub fn log_pdf(&self, theta: Angle) -> f64 {
        self.kappa * (theta.radians() - self.mu.radians()).cos()
            - LN_TAU
            - bessel::log_i0(self.kappa)
    }

    /// Exact draw by the Best–Fisher wrapped-Cauchy envelope method;
    /// deterministic for a fixed generator state.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Angle {
        if self.kappa < 1e-8 {
            return Angle::new(rng.gen::<f64>() * TAU);
        }
        let kappa = self.kappa;
        let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
        let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
        let r = (1.0 + rho * rho) / (2.0 * rho);
        loop {
            let z = (PI * rng.gen::<f64>()).cos();
            let f = (1.0 + r * z) / (r + z);
            let c = kappa * (r - f);
            let u = rng.gen::<f64>();
            if c * (2.0 - c) - u > 0.0 || (u > 0.0 && (c / u).ln() + 1.0 - c >= 0.0) {
                let side = if rng.gen::<f64>() < 0.5 { -1.0 } else { 1.0 };
                return Angle::new(self.mu.radians() + side * f.acos());
            }
        }
    }
}

/// A weighted mixture of von Mises components; weights are strictly positive
/// and sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct VonMisesMixture {
    components: Vec<VonMisesComponent>,
    weights: Vec<f64>,
}

impl VonMisesMixture {
    pub fn new(
        components: Vec<VonMisesComponent>,
        weights: Vec<f64>,
    ) -> Result<Self, VonMisesError> {
        if components.is_empty() {
            return Err(VonMisesError::EmptyMixture);
        }
        if components.len() != weights.len() {
            return Err(VonMisesError::LengthMismatch {
                components: components.len(),
                weights: weights.len(),
            });
        }
        let mut sum = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w <= 0.0 {
                return Err(VonMisesError::InvalidWeight {
                    index: i,
                    weight: w,
                });
            }
            sum += w;
        }
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(VonMisesError::WeightSum { sum });
        }
        Ok(VonMisesMixture {
            components,
            weights,
        })
    }

    /// Single-component mixture.
    pub fn single(component: VonMisesComponent) -> Self {
        VonMisesMixture {
            components: alloc::vec![component],
            weights: alloc::vec![1.0],
        }
    }

    /// The uniform circle (one component with κ = 0).
    pub fn uniform() -> Self {
        VonMisesMixture::single(VonMisesComponent {
            mu: Angle::new(0.0),
            kappa: 0.0,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.components.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn components(&self) -> &[VonMisesComponent] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn pdf(&self, theta: Angle) -> f64 {
        self.components
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| w * c.pdf(theta))
            .sum()
    }

    pub fn log_pdf(&self, theta: Angle) -> f64 {
        let mut terms = [0.0_f64; 8];
        let mut heap;
        let buf: &mut [f64] = if self.len() <= 8 {
            &mut terms[..self.len()]
        } else {
            heap = alloc::vec![0.0; self.len()];
            &mut heap
        };
        for (i, (c, w)) in self.components.iter().zip(&self.weights).enumerate() {
            buf[i] = w.ln() + c.log_pdf(theta);
        }
        logsumexp(buf)
    }

    /// Index of the heaviest component (ties resolve to the lowest index).
    pub fn dominant_component(&self) -> usize {
        let mut best = 0;
        for (i, &w) in self.weights.iter().enumerate() {
            if w > self.weights[best] {
                best = i;
            }
        }
        best
    }

    /// Component with the highest posterior responsibility for `theta`.
    pub fn responsibility_argmax(&self, theta: Angle) -> usize {
        let mut best = 0;
        let mut best_val = f64::NEG_INFINITY;
        for (i, (c, w)) in self.components.iter().zip(&self.weights).enumerate() {
            let v = w.ln() + c.log_pdf(theta);
            if v > best_val {
                best_val = v;
                best = i;
            }
        }
        best
    }

    /// Argmax of the mixture density over an evenly spaced grid.
    pub fn most_probable_direction(&self, grid: usize) -> Angle {
        let n = grid.max(4);
        let mut best = 0.0;
        let mut best_val = f64::NEG_INFINITY;
        for i in 0..n {
            let theta = i as f64 / n as f64 * TAU;
            let v = self.log_pdf(Angle::new(theta));
            if v > best_val {
                best_val = v;
                best = theta;
            }
        }
        Angle::new(best)
    }

    /// Draws a mode index from the categorical weight distribution, then an
    /// angle from that component. Returns `(angle, mode index)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Angle, usize) {
        let mode = self.sample_mode(rng);
        (self.components[mode].sample(rng), mode)
    }

    fn sample_mode<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, &w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        self.weights.len() - 1
    }
}

pub(crate) fn logsumexp(xs: &[f64]) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for &x in xs {
        if x > max {
            max = x;
        }
    }
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Result of inverting the resultant-length equation `A(κ) = R̄`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaFit {
    pub kappa: f64,
    /// True when R̄ hit [`RBAR_CAP`] or the solution exceeded [`KAPPA_MAX`].
    pub saturated: bool,
}

/// Solves `I₁(κ)/I₀(κ) = rbar` for κ: closed-form seed
/// `κ₀ = R̄(2 − R̄²)/(1 − R̄²)` refined by Newton steps on
/// `A′(κ) = 1 − A² − A/κ`, capped at [`KAPPA_MAX`].
pub fn kappa_from_rbar(rbar: f64) -> Result<KappaFit, VonMisesError> {
    if !rbar.is_finite() || !(0.0..=1.0).contains(&rbar) {
        return Err(VonMisesError::InvalidRbar { rbar });
    }
    if rbar >= RBAR_CAP {
        return Ok(KappaFit {
            kappa: KAPPA_MAX,
            saturated: true,
        });
    }
    if rbar == 0.0 {
        return Ok(KappaFit {
            kappa: 0.0,
            saturated: false,
        });
    }
    let r2 = rbar * rbar;
    let mut kappa = rbar * (2.0 - r2) / (1.0 - r2);
    for _ in 0..64 {
        if kappa >= KAPPA_MAX {
            return Ok(KappaFit {
                kappa: KAPPA_MAX,
                saturated: true,
            });
        }
        let a = bessel::i1_over_i0(kappa);
        let f = a - rbar;
        if f.abs() <= 1e-12 {
            break;
        }
        let deriv = 1.0 - a * a - a / kappa;
        let mut next = kappa - f / deriv;
        if !next.is_finite() || next <= 0.0 {
            next = kappa / 2.0;
        }
        kappa = next;
    }
    if kappa >= KAPPA_MAX {
        Ok(KappaFit {
            kappa: KAPPA_MAX,
            saturated: true,
        })
    } else {
        Ok(KappaFit {
            kappa,
            saturated: false,
        })
    }
}

/// Circular variance `1 − I₁(κ)/I₀(κ)`; 1 at κ = 0, decreasing in κ.
pub fn circular_variance(kappa: f64) -> f64 {
    1.0 - bessel::i1_over_i0(kappa)
}

/// Circular standard deviation `sqrt(circular_variance)`, the σ used by the
/// 2σ speed-association window.
pub fn circular_std(kappa: f64) -> f64 {
    circular_variance(kappa).sqrt()
}
