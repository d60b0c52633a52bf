//! Synthetic ground-truth scenarios for testing and benchmarking.
//!
//! Three road archetypes: a straight corridor, a three-way branching
//! junction (a vertical main road with horizontal collector arms), and a
//! circular roundabout. Positions are integrated from sampled headings and
//! speeds, so deriving observations from the generated tracks recovers the
//! generating distributions exactly.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};
use core::fmt;

use rand::Rng;

use crate::angle::Angle;
use crate::motion::{RawTrajectory, TrackPoint};
use crate::speed::GammaParams;
use crate::vonmises::VonMisesComponent;

#[allow(unused_imports)]
use crate::float::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthError {
    /// Branch weights must be positive and sum to 1 within 1e-9.
    InvalidWeights,
    InvalidConfig(&'static str),
}

impl fmt::Display for SynthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidWeights => write!(f, "branch weights must be positive and sum to 1"),
            Self::InvalidConfig(what) => write!(f, "invalid scenario config: {what}"),
        }
    }
}

impl core::error::Error for SynthError {}

/// Straight road along +x starting near the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct CorridorConfig {
    pub tracks: usize,
    pub steps: usize,
    pub dt: f64,
    pub speed_mean: f64,
    pub speed_std: f64,
    /// Concentration of the per-segment heading noise.
    pub heading_kappa: f64,
    /// Lateral extent of start positions, y ∈ [margin, width − margin).
    pub width: f64,
}

impl Default for CorridorConfig {
    fn default() -> Self {
        CorridorConfig {
            tracks: 300,
            steps: 60,
            dt: 1.0,
            speed_mean: 5.0,
            speed_std: 0.5,
            heading_kappa: 400.0,
            width: 15.0,
        }
    }
}

/// Vertical main road crossing a junction at y = 0, x ≈ `lane_x`; vehicles
/// continue straight (+y), turn left (−x), or turn right (+x) with the given
/// weights once they cross the junction line.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreeWayConfig {
    pub tracks: usize,
    pub steps: usize,
    /// Steps spent on the approach before the junction line.
    pub approach_steps: usize,
    pub dt: f64,
    pub speed_mean: f64,
    pub speed_std: f64,
    pub heading_kappa: f64,
    /// P(straight), P(left), P(right).
    pub branch_weights: [f64; 3],
    pub lane_x: f64,
}

impl Default for ThreeWayConfig {
    fn default() -> Self {
        ThreeWayConfig {
            tracks: 1000,
            steps: 40,
            approach_steps: 20,
            dt: 1.0,
            speed_mean: 5.0,
            speed_std: 0.5,
            heading_kappa: 400.0,
            branch_weights: [0.5, 0.25, 0.25],
            lane_x: 2.5,
        }
    }
}

/// Counterclockwise ring of the given radius centered on the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundaboutConfig {
    pub tracks: usize,
    pub steps: usize,
    pub dt: f64,
    pub speed_mean: f64,
    pub speed_std: f64,
    pub radius: f64,
    /// Standard deviation of radial jitter; 0 keeps tracks exactly on the
    /// ring so derived headings stay tangential.
    pub radial_noise: f64,
}

impl Default for RoundaboutConfig {
    fn default() -> Self {
        RoundaboutConfig {
            tracks: 200,
            steps: 130,
            dt: 0.15,
            speed_mean: 5.0,
            speed_std: 0.5,
            radius: 20.0,
            radial_noise: 0.0,
        }
    }
}

/// A scenario kind with its generation parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Corridor(CorridorConfig),
    ThreeWay(ThreeWayConfig),
    Roundabout(RoundaboutConfig),
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Corridor(_) => "corridor",
            Scenario::ThreeWay(_) => "three_way",
            Scenario::Roundabout(_) => "roundabout",
        }
    }
}

/// Generates kinematically consistent trajectories for a scenario.
pub fn generate<R: Rng + ?Sized>(
    scenario: &Scenario,
    rng: &mut R,
) -> Result<Vec<RawTrajectory>, SynthError> {
    match scenario {
        Scenario::Corridor(cfg) => corridor(cfg, rng),
        Scenario::ThreeWay(cfg) => three_way(cfg, rng),
        Scenario::Roundabout(cfg) => roundabout(cfg, rng),
    }
}

/// Per-track speed sampler; zero spread degenerates to the constant mean.
struct SpeedDraw {
    mean: f64,
    model: Option<GammaParams>,
}

impl SpeedDraw {
    fn new(mean: f64, std: f64) -> Result<Self, SynthError> {
        if mean <= 0.0 {
            return Err(SynthError::InvalidConfig("speed_mean must be > 0"));
        }
        let model = if std > 0.0 {
            let alpha = (mean / std) * (mean / std);
            let beta = mean / (std * std);
            Some(GammaParams::new(alpha, beta).map_err(|_| SynthError::InvalidConfig("speed"))?)
        } else {
            None
        };
        Ok(SpeedDraw { mean, model })
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.model {
            Some(g) => g.sample(rng),
            None => self.mean,
        }
    }
}

fn heading_noise(kappa: f64) -> Result<Option<VonMisesComponent>, SynthError> {
    if kappa < 0.0 || !kappa.is_finite() {
        return Err(SynthError::InvalidConfig(
            "heading_kappa must be finite and >= 0",
        ));
    }
    if kappa == 0.0 {
        return Ok(None);
    }
    VonMisesComponent::new(Angle::new(0.0), kappa)
        .map(Some)
        .map_err(|_| SynthError::InvalidConfig("heading_kappa"))
}

fn noisy_heading<R: Rng + ?Sized>(
    base: f64,
    noise: &Option<VonMisesComponent>,
    rng: &mut R,
) -> f64 {
    match noise {
        Some(vm) => {
            let jitter = vm.sample(rng).radians();
            let centered = if jitter > PI { jitter - TAU } else { jitter };
            base + centered
        }
        None => base,
    }
}

#[allow(clippy::too_many_arguments)]
fn walk<R: Rng + ?Sized>(
    id: String,
    mut x: f64,
    mut y: f64,
    steps: usize,
    dt: f64,
    speeds: &SpeedDraw,
    noise: &Option<VonMisesComponent>,
    mut base_heading: impl FnMut(f64, f64) -> f64,
    rng: &mut R,
) -> RawTrajectory {
    let mut points = Vec::with_capacity(steps + 1);
    points.push(TrackPoint { t: 0.0, x, y });
    for k in 0..steps {
        let base = base_heading(x, y);
        let theta = noisy_heading(base, noise, rng);
        let s = speeds.draw(rng);
        x += s * dt * theta.cos();
        y += s * dt * theta.sin();
        points.push(TrackPoint {
            t: (k + 1) as f64 * dt,
            x,
            y,
        });
    }
    RawTrajectory::new(id, points).expect("generated timestamps are strictly increasing")
}

fn corridor<R: Rng + ?Sized>(
    cfg: &CorridorConfig,
    rng: &mut R,
) -> Result<Vec<RawTrajectory>, SynthError> {
    if cfg.dt <= 0.0 || cfg.steps == 0 || cfg.width <= 0.0 {
        return Err(SynthError::InvalidConfig(
            "dt, steps, and width must be positive",
        ));
    }
    let speeds = SpeedDraw::new(cfg.speed_mean, cfg.speed_std)?;
    let noise = heading_noise(cfg.heading_kappa)?;
    let margin = (0.1 * cfg.width).min(0.5);
    let step = cfg.speed_mean * cfg.dt;
    let mut tracks = Vec::with_capacity(cfg.tracks);
    for i in 0..cfg.tracks {
        let x0 = rng.gen::<f64>() * step;
        let y0 = margin + rng.gen::<f64>() * (cfg.width - 2.0 * margin);
        tracks.push(walk(
            format!("corridor-{i:04}"),
            x0,
            y0,
            cfg.steps,
            cfg.dt,
            &speeds,
            &noise,
            |_, _| 0.0,
            rng,
        ));
    }
    Ok(tracks)
}

// Straight, left, right from a northbound approach.
const BRANCH_HEADINGS: [f64; 3] = [PI / 2.0, PI, 0.0];

fn three_way<R: Rng + ?Sized>(
    cfg: &ThreeWayConfig,
    rng: &mut R,
) -> Result<Vec<RawTrajectory>, SynthError> {
    let wsum: f64 = cfg.branch_weights.iter().sum();
    if cfg.branch_weights.iter().any(|&w| w <= 0.0) || (wsum - 1.0).abs() > 1e-9 {
        return Err(SynthError::InvalidWeights);
    }
    if cfg.dt <= 0.0 || cfg.steps == 0 || cfg.approach_steps >= cfg.steps {
        return Err(SynthError::InvalidConfig(
            "need dt > 0 and approach_steps < steps",
        ));
    }
    let speeds = SpeedDraw::new(cfg.speed_mean, cfg.speed_std)?;
    let noise = heading_noise(cfg.heading_kappa)?;
    let step = cfg.speed_mean * cfg.dt;
    let approach_len = cfg.approach_steps as f64 * step;
    let mut tracks = Vec::with_capacity(cfg.tracks);
    for i in 0..cfg.tracks {
        let u: f64 = rng.gen();
        let branch = if u < cfg.branch_weights[0] {
            0
        } else if u < cfg.branch_weights[0] + cfg.branch_weights[1] {
            1
        } else {
            2
        };
        let x0 = cfg.lane_x + (rng.gen::<f64>() - 0.5);
        let y0 = -approach_len + rng.gen::<f64>() * step;
        let mut branched = false;
        tracks.push(walk(
            format!("three_way-{i:04}"),
            x0,
            y0,
            cfg.steps,
            cfg.dt,
            &speeds,
            &noise,
            move |_, y| {
                if !branched && y >= 0.0 {
                    branched = true;
                }
                if branched {
                    BRANCH_HEADINGS[branch]
                } else {
                    PI / 2.0
                }
            },
            rng,
        ));
    }
    Ok(tracks)
}

fn roundabout<R: Rng + ?Sized>(
    cfg: &RoundaboutConfig,
    rng: &mut R,
) -> Result<Vec<RawTrajectory>, SynthError> {
    if cfg.radius <= 0.0 || cfg.dt <= 0.0 || cfg.steps == 0 {
        return Err(SynthError::InvalidConfig(
            "radius, dt, and steps must be positive",
        ));
    }
    if cfg.radial_noise < 0.0 {
        return Err(SynthError::InvalidConfig("radial_noise must be >= 0"));
    }
    let speeds = SpeedDraw::new(cfg.speed_mean, cfg.speed_std)?;
    let mut tracks = Vec::with_capacity(cfg.tracks);
    for i in 0..cfg.tracks {
        let mut phi = rng.gen::<f64>() * TAU;
        let v = speeds.draw(rng);
        let omega = v / cfg.radius;
        let mut points = Vec::with_capacity(cfg.steps + 1);
        for k in 0..=cfg.steps {
            let r = if cfg.radial_noise > 0.0 {
                cfg.radius + cfg.radial_noise * (2.0 * rng.gen::<f64>() - 1.0)
            } else {
                cfg.radius
            };
            points.push(TrackPoint {
                t: k as f64 * cfg.dt,
                x: r * phi.cos(),
                y: r * phi.sin(),
            });
            phi += omega * cfg.dt;
        }
        let traj = RawTrajectory::new(format!("roundabout-{i:04}"), points)
            .expect("generated timestamps are strictly increasing");
        tracks.push(traj);
    }
    Ok(tracks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angle::circular_stats;
    use crate::motion::derive_motion;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn corridor_headings_are_concentrated() {
        let cfg = CorridorConfig {
            tracks: 100,
            heading_kappa: 50.0,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tracks = generate(&Scenario::Corridor(cfg), &mut rng).unwrap();
        assert_eq!(tracks.len(), 100);
        let headings: Vec<_> = tracks
            .iter()
            .flat_map(derive_motion)
            .map(|o| o.theta)
            .collect();
        let stats = circular_stats(&headings).unwrap();
        assert!(stats.rbar > 0.97, "rbar = {}", stats.rbar);
        assert!(stats.mean.unwrap().dist(Angle::new(0.0)).to_degrees() < 2.0);
    }

    #[test]
    fn three_way_branch_counts_are_binomial() {
        let cfg = ThreeWayConfig {
            tracks: 1000,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let tracks = generate(&Scenario::ThreeWay(cfg), &mut rng).unwrap();
        // Classify each track by its final heading.
        let mut counts = [0usize; 3];
        for t in tracks.iter() {
            let obs = derive_motion(t);
            let last = obs.last().unwrap().theta;
            let branch = BRANCH_HEADINGS
                .iter()
                .enumerate()
                .min_by(|(_, &a), (_, &b)| {
                    last.dist(Angle::new(a))
                        .partial_cmp(&last.dist(Angle::new(b)))
                        .unwrap()
                })
                .unwrap()
                .0;
            counts[branch] += 1;
        }
        let n = 1000.0_f64;
        for (i, &w) in [0.5, 0.25, 0.25].iter().enumerate() {
            let sigma = (w * (1.0 - w) / n).sqrt();
            let freq = counts[i] as f64 / n;
            assert!(
                (freq - w).abs() <= 3.0 * sigma + 1e-9,
                "branch {i}: {freq} vs {w}"
            );
        }
    }

    #[test]
    fn three_way_rejects_bad_weights() {
        let cfg = ThreeWayConfig {
            branch_weights: [0.5, 0.3, 0.3],
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(
            generate(&Scenario::ThreeWay(cfg), &mut rng),
            Err(SynthError::InvalidWeights)
        );
    }

    #[test]
    fn roundabout_headings_are_tangential() {
        let cfg = RoundaboutConfig {
            radius: 20.0,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let tracks = generate(&Scenario::Roundabout(cfg), &mut rng).unwrap();
        for t in tracks.iter() {
            for obs in derive_motion(t) {
                let radial = Angle::new(obs.y.atan2(obs.x));
                let offset = obs.theta.dist(radial).to_degrees();
                assert!((offset - 90.0).abs() <= 2.0, "offset = {offset}");
            }
        }
    }

    #[test]
    fn roundabout_radii_stay_on_ring() {
        let cfg = RoundaboutConfig {
            radius: 20.0,
            radial_noise: 0.5,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tracks = generate(&Scenario::Roundabout(cfg), &mut rng).unwrap();
        for t in tracks.iter() {
            for p in t.points() {
                let r = (p.x * p.x + p.y * p.y).sqrt();
                assert!((r - 20.0).abs() <= 0.5 + 1e-12, "r = {r}");
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = Scenario::Corridor(CorridorConfig {
            tracks: 5,
            ..Default::default()
        });
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        assert_eq!(
            generate(&cfg, &mut a).unwrap(),
            generate(&cfg, &mut b).unwrap()
        );
    }
}
