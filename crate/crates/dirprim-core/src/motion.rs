//! Trajectories and the motion observations derived from them.
//!
//! A trajectory is an ordered series of timed positions. Consecutive pairs
//! yield one observation each: heading `atan2(Δy, Δx)`, speed
//! `‖Δp‖ / Δt`, anchored at the segment's starting position (the position
//! decides which grid cell the observation trains).

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::angle::Angle;

#[allow(unused_imports)]
use crate::float::*;

/// Segments slower than this (m/s) are dropped: stationary or jittering
/// vehicles produce near-zero speeds with meaningless headings.
pub const SPEED_FLOOR: f64 = 0.1;

/// A planar position in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

/// One timed sample of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryError {
    /// A trajectory needs at least two samples.
    TooShort { len: usize },
    /// Timestamps must be strictly increasing.
    NonMonotonicTime { index: usize },
}

impl fmt::Display for TrajectoryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TooShort { len } => write!(f, "trajectory needs >= 2 samples, got {len}"),
            Self::NonMonotonicTime { index } => {
                write!(f, "timestamps not strictly increasing at sample {index}")
            }
        }
    }
}

impl core::error::Error for TrajectoryError {}

/// An identified trajectory with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTrajectory {
    id: String,
    points: Vec<TrackPoint>,
}

impl RawTrajectory {
    pub fn new(id: String, points: Vec<TrackPoint>) -> Result<Self, TrajectoryError> {
        if points.len() < 2 {
            return Err(TrajectoryError::TooShort { len: points.len() });
        }
        for (i, pair) in points.windows(2).enumerate() {
            if pair[1].t <= pair[0].t {
                return Err(TrajectoryError::NonMonotonicTime { index: i + 1 });
            }
        }
        Ok(RawTrajectory { id, points })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn points(&self) -> &[TrackPoint] {
        &self.points
    }
}

/// A training/evaluation record: position, heading, and speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionObservation {
    pub x: f64,
    pub y: f64,
    pub theta: Angle,
    pub speed: f64,
}

/// Turns a trajectory into observations, one per consecutive sample pair.
/// Pairs slower than [`SPEED_FLOOR`] are dropped, not fatal.
pub fn derive_motion(traj: &RawTrajectory) -> Vec<MotionObservation> {
    let mut out = Vec::with_capacity(traj.points.len() - 1);
    for pair in traj.points.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let dx = b.x - a.x;
        let dy = b.y - a.y;
        let dt = b.t - a.t;
        let speed = (dx * dx + dy * dy).sqrt() / dt;
        if speed < SPEED_FLOOR {
            continue;
        }
        out.push(MotionObservation {
            x: a.x,
            y: a.y,
            theta: Angle::new(dy.atan2(dx)),
            speed,
        });
    }
    out
}
