//! Angles normalized to `[0, 2π)` and circular summary statistics.
//!
//! Heading convention: 0 points along the +x axis, angles grow
//! counterclockwise, radians everywhere. Degrees appear only at user-facing
//! boundaries.

use core::f64::consts::{PI, TAU};
use core::fmt;

#[allow(unused_imports)]
use crate::float::*;

/// Resultant lengths below this leave the circular mean undefined.
pub const RESULTANT_EPS: f64 = 1e-12;

/// An angle in radians, always normalized into `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Angle(f64);

impl Angle {
    /// Wraps any finite value into `[0, 2π)`.
    pub fn new(radians: f64) -> Self {
        Angle(wrap_tau(radians))
    }

    pub fn from_degrees(degrees: f64) -> Self {
        Angle::new(degrees * PI / 180.0)
    }

    #[inline]
    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        self.0 * 180.0 / PI
    }

    /// Signed difference `self − other` wrapped into `(−π, π]`.
    pub fn signed_diff(self, other: Angle) -> f64 {
        let mut d = wrap_tau(self.0 - other.0);
        if d > PI {
            d -= TAU;
        }
        d
    }

    /// Wrapped absolute distance in `[0, π]`.
    pub fn dist(self, other: Angle) -> f64 {
        self.signed_diff(other).abs()
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} rad", self.0)
    }
}

fn wrap_tau(x: f64) -> f64 {
    let mut r = x - TAU * (x / TAU).floor();
    // Guard the rounding edges of the reduction.
    if r < 0.0 {
        r += TAU;
    }
    if r >= TAU {
        r = 0.0;
    }
    r
}

/// Circular mean and resultant length of a sample of angles.
///
/// `mean` is `None` when the resultant length is numerically zero
/// (antipodal or uniform data leave no preferred direction).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircularStats {
    pub mean: Option<Angle>,
    pub rbar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CircularStatsError {
    EmptyInput,
    /// Weighted statistics need a strictly positive total weight.
    ZeroTotalWeight,
}

impl fmt::Display for CircularStatsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyInput => write!(f, "circular statistics of an empty sample"),
            Self::ZeroTotalWeight => write!(f, "total weight is not positive"),
        }
    }
}

impl core::error::Error for CircularStatsError {}

/// Mean direction `atan2(Σ sin θ, Σ cos θ)` and resultant length `R̄ = |Σ e^{iθ}| / N`.
pub fn circular_stats(angles: &[Angle]) -> Result<CircularStats, CircularStatsError> {
    if angles.is_empty() {
        return Err(CircularStatsError::EmptyInput);
    }
    let mut sum_sin = 0.0;
    let mut sum_cos = 0.0;
    for a in angles {
        sum_sin += a.radians().sin();
        sum_cos += a.radians().cos();
    }
    Ok(resultant_stats(sum_sin, sum_cos, angles.len() as f64))
}

/// Weighted variant of [`circular_stats`]; weights must be nonnegative with a
/// positive sum. Used by the EM M-step with responsibilities as weights.
pub fn circular_stats_weighted(
    angles: &[Angle],
    weights: &[f64],
) -> Result<CircularStats, CircularStatsError> {
    if angles.is_empty() || angles.len() != weights.len() {
        return Err(CircularStatsError::EmptyInput);
    }
    let mut sum_sin = 0.0;
    let mut sum_cos = 0.0;
    let mut total = 0.0;
    for (a, w) in angles.iter().zip(weights) {
        sum_sin += w * a.radians().sin();
        sum_cos += w * a.radians().cos();
        total += w;
    }
    if total <= 0.0 {
        return Err(CircularStatsError::ZeroTotalWeight);
    }
    Ok(resultant_stats(sum_sin, sum_cos, total))
}

fn resultant_stats(sum_sin: f64, sum_cos: f64, total: f64) -> CircularStats {
    let rbar = (sum_sin * sum_sin + sum_cos * sum_cos).sqrt() / total;
    let mean = if rbar < RESULTANT_EPS {
        None
    } else {
        Some(Angle::new(sum_sin.atan2(sum_cos)))
    };
    CircularStats { mean, rbar }
}
