//! Using a fitted map: hallucinating next positions, fusing the prior with a
//! live belief by rejection sampling, and rolling out trajectories.
//!
//! Fusion targets the product `p_*(θ) ∝ p_t(θ) · p₀(θ)` of the current
//! belief and the cell's prior. Samples come from a broad von Mises
//! proposal with an envelope constant taken off a density grid; draws
//! `θ̃ ~ q`, `ũ ~ U[0, k·q(θ̃)]` are accepted whenever `ũ ≤ p_*(θ̃)`.

use alloc::vec::Vec;
use core::f64::consts::TAU;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::angle::Angle;
use crate::grid::{DirectionalPrimitive, PrimitiveMap};
use crate::motion::Point;
use crate::vonmises::{VonMisesComponent, VonMisesMixture};

#[allow(unused_imports)]
use crate::float::*;

/// Product densities whose grid maximum falls below this are treated as
/// numerically zero: the prior and belief have no common support.
const PRODUCT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum InferError {
    /// The queried position is outside the map.
    OutsideMap {
        x: f64,
        y: f64,
    },
    /// Prior and belief are numerically incompatible (their product is zero
    /// everywhere on the evaluation grid).
    FusionDegenerate,
    /// The proposal budget ran out before enough samples were accepted.
    FusionDidNotConverge {
        accepted: usize,
        requested: usize,
        acceptance_rate: f64,
    },
    InvalidArgument(&'static str),
}

impl fmt::Display for InferError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::OutsideMap { x, y } => write!(f, "position ({x}, {y}) is outside the map"),
            Self::FusionDegenerate => {
                write!(f, "prior and belief have numerically disjoint support")
            }
            Self::FusionDidNotConverge { accepted, requested, acceptance_rate } => write!(
                f,
                "accepted only {accepted}/{requested} samples (acceptance rate {acceptance_rate:.2e})"
            ),
            Self::InvalidArgument(what) => write!(f, "{what}"),
        }
    }
}

impl core::error::Error for InferError {}

/// One hallucinated next state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedSample {
    pub position: Point,
    pub angle: Angle,
    pub speed: f64,
}

/// Hallucination output; `uninformative` flags that the cell had no fitted
/// prior and directions were drawn uniformly.
#[derive(Debug, Clone, PartialEq)]
pub struct Hallucination {
    pub samples: Vec<ProjectedSample>,
    pub uninformative: bool,
}

/// Default projection speed for a cell: the dominant mode's mean speed when
/// a model exists, otherwise 1 m/s.
pub fn cell_default_speed(primitive: &DirectionalPrimitive) -> f64 {
    primitive
        .mixture()
        .and_then(|m| primitive.speed_modes()[m.dominant_component()].as_ref())
        .map(|g| g.mean())
        .unwrap_or(1.0)
}

/// Draws `n` directions (and speeds) from the cell containing `position`
/// and projects the vehicle one step of `dt` seconds along each.
///
/// With `use_speed`, each draw uses the gamma model of its sampled mode when
/// available; otherwise (and whenever `use_speed` is off) the cell default
/// speed applies.
pub fn hallucinate<R: Rng + ?Sized>(
    map: &PrimitiveMap,
    position: Point,
    n: usize,
    dt: f64,
    use_speed: bool,
    rng: &mut R,
) -> Result<Hallucination, InferError> {
    if dt.is_nan() || dt <= 0.0 {
        return Err(InferError::InvalidArgument("dt must be > 0"));
    }
    let cell = map
        .spec()
        .locate(position.x, position.y)
        .ok_or(InferError::OutsideMap {
            x: position.x,
            y: position.y,
        })?;
    let primitive = map.cell(cell);
    let default_speed = cell_default_speed(primitive);
    let mut samples = Vec::with_capacity(n);
    match primitive.mixture() {
        Some(mixture) => {
            for _ in 0..n {
                let (angle, mode) = mixture.sample(rng);
                let speed = if use_speed {
                    primitive.speed_modes()[mode]
                        .as_ref()
                        .map(|g| g.sample(rng))
                        .unwrap_or(default_speed)
                } else {
                    default_speed
                };
                samples.push(project(position, angle, speed, dt));
            }
            Ok(Hallucination {
                samples,
                uninformative: false,
            })
        }
        None => {
            for _ in 0..n {
                let angle = Angle::new(rng.gen::<f64>() * TAU);
                samples.push(project(position, angle, default_speed, dt));
            }
            Ok(Hallucination {
                samples,
                uninformative: true,
            })
        }
    }
}

fn project(from: Point, angle: Angle, speed: f64, dt: f64) -> ProjectedSample {
    ProjectedSample {
        position: Point {
            x: from.x + speed * dt * angle.radians().cos(),
            y: from.y + speed * dt * angle.radians().sin(),
        },
        angle,
        speed,
    }
}

/// Unnormalized fused density `p₀(θ) · p_t(θ)`.
pub fn product_density(prior: &VonMisesMixture, belief: &VonMisesMixture, theta: Angle) -> f64 {
    prior.pdf(theta) * belief.pdf(theta)
}

/// Rejection-sampling parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FuseConfig {
    /// Concentration of the von Mises proposal; small enough to stay broad.
    pub proposal_kappa: f64,
    /// Safety factor on the gridded envelope maximum.
    pub envelope_margin: f64,
    /// Grid resolution used for the proposal center and envelope constant.
    pub envelope_grid: usize,
    /// Grid resolution of the always-on envelope validity check.
    pub check_grid: usize,
    /// Proposal budget per requested accepted sample.
    pub proposals_per_accept: usize,
}

impl Default for FuseConfig {
    fn default() -> Self {
        FuseConfig {
            proposal_kappa: 0.5,
            envelope_margin: 1.2,
            envelope_grid: 720,
            check_grid: 3600,
            proposals_per_accept: 1000,
        }
    }
}

/// Fusion result: the inputs, the accepted direction samples, and the
/// observed acceptance rate.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedDirection {
    pub prior: VonMisesMixture,
    pub belief: VonMisesMixture,
    pub samples: Vec<Angle>,
    pub acceptance_rate: f64,
}

/// Draws `n_accept` exact samples from the normalized product of `prior` and
/// `belief` by rejection sampling.
///
/// The proposal is a von Mises centered on the grid argmax of the product
/// with concentration `cfg.proposal_kappa`; the envelope constant is
/// `cfg.envelope_margin` times the gridded maximum of `p_*/q`.
pub fn fuse<R: Rng + ?Sized>(
    prior: &VonMisesMixture,
    belief: &VonMisesMixture,
    n_accept: usize,
    cfg: &FuseConfig,
    rng: &mut R,
) -> Result<FusedDirection, InferError> {
    if n_accept == 0 {
        return Err(InferError::InvalidArgument("n_accept must be >= 1"));
    }
    if cfg.proposal_kappa.is_nan()
        || cfg.proposal_kappa < 0.0
        || cfg.envelope_margin.is_nan()
        || cfg.envelope_margin <= 1.0
        || cfg.envelope_grid < 8
    {
        return Err(InferError::InvalidArgument("invalid fuse config"));
    }

    // Proposal centered on the coarse-grid argmax of the product.
    let mut best_theta = 0.0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..cfg.envelope_grid {
        let theta = i as f64 / cfg.envelope_grid as f64 * TAU;
        let p = product_density(prior, belief, Angle::new(theta));
        if p > best {
            best = p;
            best_theta = theta;
        }
    }
    // NaN-aware: a NaN maximum also counts as degenerate.
    if best.is_nan() || best <= PRODUCT_FLOOR {
        return Err(InferError::FusionDegenerate);
    }
    let proposal = VonMisesComponent::new(Angle::new(best_theta), cfg.proposal_kappa)
        .map_err(|_| InferError::InvalidArgument("proposal_kappa out of range"))?;

    let mut ratio_max = 0.0_f64;
    for i in 0..cfg.envelope_grid {
        let theta = Angle::new(i as f64 / cfg.envelope_grid as f64 * TAU);
        let ratio = product_density(prior, belief, theta) / proposal.pdf(theta);
        ratio_max = ratio_max.max(ratio);
    }
    let k = cfg.envelope_margin * ratio_max;

    // Envelope validity is an internal invariant, not an error state.
    for i in 0..cfg.check_grid {
        let theta = Angle::new(i as f64 / cfg.check_grid as f64 * TAU);
        assert!(
            k * proposal.pdf(theta) >= product_density(prior, belief, theta),
            "rejection envelope violated at {theta}"
        );
    }

    let budget = cfg.proposals_per_accept.saturating_mul(n_accept);
    let mut samples = Vec::with_capacity(n_accept);
    let mut proposed = 0usize;
    while samples.len() < n_accept && proposed < budget {
        proposed += 1;
        let theta = proposal.sample(rng);
        let bound = k * proposal.pdf(theta);
        let u = rng.gen::<f64>() * bound;
        if u <= product_density(prior, belief, theta) {
            samples.push(theta);
        }
    }
    let acceptance_rate = samples.len() as f64 / proposed as f64;
    if samples.len() < n_accept {
        return Err(InferError::FusionDidNotConverge {
            accepted: samples.len(),
            requested: n_accept,
            acceptance_rate,
        });
    }
    Ok(FusedDirection {
        prior: prior.clone(),
        belief: belief.clone(),
        samples,
        acceptance_rate,
    })
}

/// Why a generated trajectory stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Reached the step horizon.
    Horizon,
    /// Stepped off the grid.
    LeftMap,
    /// Entered a cell without a fitted prior.
    UninformativeCell,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Horizon => "horizon",
            Termination::LeftMap => "left_map",
            Termination::UninformativeCell => "uninformative_cell",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedTrajectory {
    pub points: Vec<Point>,
    pub terminated: Termination,
}

/// Rolls out `k` trajectories from `x0`: per step, sample a direction (and
/// optionally a speed) from the current cell and move for `dt` seconds.
/// Trajectories stop at the horizon `t_max`, on leaving the map, or on
/// entering an uninformative cell.
///
/// Each trajectory runs on its own derived random stream, so results do not
/// depend on evaluation order.
pub fn generate_trajectories<R: Rng + ?Sized>(
    map: &PrimitiveMap,
    x0: Point,
    k: usize,
    t_max: usize,
    dt: f64,
    use_speed: bool,
    rng: &mut R,
) -> Result<Vec<GeneratedTrajectory>, InferError> {
    if k == 0 || t_max == 0 {
        return Err(InferError::InvalidArgument("k and t_max must be >= 1"));
    }
    if dt.is_nan() || dt <= 0.0 {
        return Err(InferError::InvalidArgument("dt must be > 0"));
    }
    if map.spec().locate(x0.x, x0.y).is_none() {
        return Err(InferError::OutsideMap { x: x0.x, y: x0.y });
    }
    let seeds: Vec<u64> = (0..k).map(|_| rng.gen()).collect();
    Ok(seeds
        .into_iter()
        .map(|seed| {
            let mut stream = ChaCha8Rng::seed_from_u64(seed);
            rollout(map, x0, t_max, dt, use_speed, &mut stream)
        })
        .collect())
}

fn rollout<R: Rng + ?Sized>(
    map: &PrimitiveMap,
    x0: Point,
    t_max: usize,
    dt: f64,
    use_speed: bool,
    rng: &mut R,
) -> GeneratedTrajectory {
    let mut points = Vec::with_capacity(t_max + 1);
    let mut pos = x0;
    points.push(pos);
    for _ in 0..t_max {
        let cell = match map.spec().locate(pos.x, pos.y) {
            Some(c) => c,
            None => {
                return GeneratedTrajectory {
                    points,
                    terminated: Termination::LeftMap,
                }
            }
        };
        let primitive = map.cell(cell);
        let mixture = match primitive.mixture() {
            Some(m) => m,
            None => {
                return GeneratedTrajectory {
                    points,
                    terminated: Termination::UninformativeCell,
                }
            }
        };
        let (angle, mode) = mixture.sample(rng);
        let speed = if use_speed {
            primitive.speed_modes()[mode]
                .as_ref()
                .map(|g| g.sample(rng))
                .unwrap_or_else(|| cell_default_speed(primitive))
        } else {
            cell_default_speed(primitive)
        };
        pos = Point {
            x: pos.x + speed * dt * angle.radians().cos(),
            y: pos.y + speed * dt * angle.radians().sin(),
        };
        points.push(pos);
    }
    GeneratedTrajectory {
        points,
        terminated: Termination::Horizon,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angle::circular_stats;
    use crate::grid::{DirectionalPrimitive, GridSpec, MapMetadata};
    use crate::speed::GammaParams;
    use crate::vonmises::KAPPA_MAX;

    fn single_cell_map(primitive: DirectionalPrimitive) -> PrimitiveMap {
        let spec = GridSpec::new(0.0, 0.0, 10.0, 1, 1).unwrap();
        PrimitiveMap::new(spec, alloc::vec![primitive], MapMetadata::default()).unwrap()
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn hallucinate_zero_samples() {
        let map = single_cell_map(DirectionalPrimitive::uninformative(0));
        let out = hallucinate(&map, Point { x: 5.0, y: 5.0 }, 0, 1.0, false, &mut rng(1)).unwrap();
        assert!(out.samples.is_empty());
        assert!(out.uninformative);
    }

    #[test]
    fn hallucinate_outside_errors() {
        let map = single_cell_map(DirectionalPrimitive::uninformative(0));
        let err = hallucinate(&map, Point { x: -1.0, y: 0.0 }, 3, 1.0, false, &mut rng(1));
        assert!(matches!(err, Err(InferError::OutsideMap { .. })));
    }

    #[test]
    fn concentrated_cell_projects_tightly() {
        // κ at the cap and a tight speed model with mean 10: every projected
        // position should sit within 0.5 m of the deterministic step.
        let mu = Angle::from_degrees(30.0);
        let mixture = VonMisesMixture::single(VonMisesComponent::new(mu, KAPPA_MAX).unwrap());
        let speeds = alloc::vec![Some(GammaParams::new(1e4, 1e3).unwrap())];
        let map = single_cell_map(DirectionalPrimitive::fitted(mixture, speeds, 100).unwrap());
        let origin = Point { x: 5.0, y: 5.0 };
        let out = hallucinate(&map, origin, 200, 1.0, true, &mut rng(2)).unwrap();
        assert!(!out.uninformative);
        let target = Point {
            x: origin.x + 10.0 * mu.radians().cos(),
            y: origin.y + 10.0 * mu.radians().sin(),
        };
        for s in &out.samples {
            let d = ((s.position.x - target.x).powi(2) + (s.position.y - target.y).powi(2)).sqrt();
            assert!(d <= 0.5, "distance {d}");
        }
    }

    #[test]
    fn uninformative_cell_samples_uniformly() {
        let map = single_cell_map(DirectionalPrimitive::uninformative(0));
        let out = hallucinate(
            &map,
            Point { x: 5.0, y: 5.0 },
            10_000,
            1.0,
            false,
            &mut rng(3),
        )
        .unwrap();
        assert!(out.uninformative);
        let angles: Vec<Angle> = out.samples.iter().map(|s| s.angle).collect();
        let stats = circular_stats(&angles).unwrap();
        assert!(stats.rbar < 0.03, "rbar = {}", stats.rbar);
        // Unit-speed fallback: all steps have length 1·dt.
        for s in &out.samples {
            assert!((s.speed - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn product_density_of_uniform_belief_scales_prior() {
        let prior =
            VonMisesMixture::single(VonMisesComponent::new(Angle::from_degrees(0.0), 2.0).unwrap());
        let belief = VonMisesMixture::uniform();
        for deg in [0.0, 45.0, 200.0] {
            let theta = Angle::from_degrees(deg);
            let got = product_density(&prior, &belief, theta);
            assert!((got - prior.pdf(theta) / TAU).abs() < 1e-15);
        }
    }

    #[test]
    fn product_density_definition() {
        let prior =
            VonMisesMixture::single(VonMisesComponent::new(Angle::from_degrees(0.0), 2.0).unwrap());
        let belief =
            VonMisesMixture::single(VonMisesComponent::new(Angle::from_degrees(0.0), 3.0).unwrap());
        let theta = Angle::from_degrees(0.0);
        let expect = prior.pdf(theta) * belief.pdf(theta);
        assert_eq!(product_density(&prior, &belief, theta), expect);
    }

    #[test]
    fn disjoint_tight_modes_are_degenerate() {
        let prior = VonMisesMixture::single(
            VonMisesComponent::new(Angle::from_degrees(0.0), 100.0).unwrap(),
        );
        let belief = VonMisesMixture::single(
            VonMisesComponent::new(Angle::from_degrees(180.0), 100.0).unwrap(),
        );
        // The product is below 1e-30 everywhere on a 1° grid.
        for i in 0..360 {
            let theta = Angle::from_degrees(i as f64);
            assert!(product_density(&prior, &belief, theta) < 1e-30);
        }
        let err = fuse(&prior, &belief, 100, &FuseConfig::default(), &mut rng(4));
        assert_eq!(err, Err(InferError::FusionDegenerate));
    }

    #[test]
    fn fusing_aligned_components_adds_concentrations() {
        // VM(0°, 2) × VM(0°, 2) ∝ VM(0°, 4): sample statistics must match
        // the analytic product.
        let c = VonMisesComponent::new(Angle::from_degrees(0.0), 2.0).unwrap();
        let prior = VonMisesMixture::single(c);
        let belief = VonMisesMixture::single(c);
        let out = fuse(&prior, &belief, 20_000, &FuseConfig::default(), &mut rng(5)).unwrap();
        assert!(out.acceptance_rate > 0.0 && out.acceptance_rate <= 1.0);
        let stats = circular_stats(&out.samples).unwrap();
        assert!(stats.mean.unwrap().dist(Angle::new(0.0)).to_degrees() < 2.0);
        let expect_rbar = crate::bessel::i1_over_i0(4.0);
        assert!(
            (stats.rbar - expect_rbar).abs() < 0.02,
            "rbar {}",
            stats.rbar
        );
    }

    #[test]
    fn fusing_orthogonal_components_follows_resultant() {
        // VM(0°, 2) × VM(90°, 2): the product is VM(45°, 2√2) by resultant
        // vector addition.
        let prior =
            VonMisesMixture::single(VonMisesComponent::new(Angle::from_degrees(0.0), 2.0).unwrap());
        let belief = VonMisesMixture::single(
            VonMisesComponent::new(Angle::from_degrees(90.0), 2.0).unwrap(),
        );
        let out = fuse(&prior, &belief, 20_000, &FuseConfig::default(), &mut rng(6)).unwrap();
        let stats = circular_stats(&out.samples).unwrap();
        assert!(
            stats
                .mean
                .unwrap()
                .dist(Angle::from_degrees(45.0))
                .to_degrees()
                < 2.0,
            "mean {}",
            stats.mean.unwrap().degrees()
        );
    }

    #[test]
    fn exhausted_proposal_budget_reports_acceptance_rate() {
        // A tight prior under a near-uniform proposal accepts rarely; a
        // budget of one proposal per requested sample cannot finish.
        let prior = VonMisesMixture::single(
            VonMisesComponent::new(Angle::from_degrees(0.0), 400.0).unwrap(),
        );
        let belief = VonMisesMixture::uniform();
        let cfg = FuseConfig {
            proposals_per_accept: 1,
            ..FuseConfig::default()
        };
        match fuse(&prior, &belief, 500, &cfg, &mut rng(10)) {
            Err(InferError::FusionDidNotConverge {
                accepted,
                requested,
                acceptance_rate,
            }) => {
                assert!(accepted < requested);
                assert!(acceptance_rate < 1.0);
            }
            other => panic!("expected convergence failure, got {other:?}"),
        }
    }

    #[test]
    fn trajectories_are_deterministic_and_bounded() {
        let mixture = VonMisesMixture::single(
            VonMisesComponent::new(Angle::from_degrees(0.0), 50.0).unwrap(),
        );
        let speeds = alloc::vec![Some(GammaParams::new(100.0, 20.0).unwrap())];
        let map = single_cell_map(DirectionalPrimitive::fitted(mixture, speeds, 10).unwrap());
        let x0 = Point { x: 1.0, y: 5.0 };
        let a = generate_trajectories(&map, x0, 5, 10, 1.0, true, &mut rng(7)).unwrap();
        let b = generate_trajectories(&map, x0, 5, 10, 1.0, true, &mut rng(7)).unwrap();
        assert_eq!(a, b);
        for t in &a {
            assert!(matches!(
                t.terminated,
                Termination::LeftMap | Termination::Horizon
            ));
            assert!(t.points.len() >= 2);
            for p in &t.points {
                assert!(p.x.is_finite() && p.y.is_finite());
            }
        }
    }

    #[test]
    fn rollout_stops_on_uninformative_cell() {
        let spec = GridSpec::new(0.0, 0.0, 5.0, 2, 1).unwrap();
        let east = VonMisesMixture::single(
            VonMisesComponent::new(Angle::from_degrees(0.0), KAPPA_MAX).unwrap(),
        );
        let cells = alloc::vec![
            DirectionalPrimitive::fitted(east, alloc::vec![None], 10).unwrap(),
            DirectionalPrimitive::uninformative(0),
        ];
        let map = PrimitiveMap::new(spec, cells, MapMetadata::default()).unwrap();
        let out = generate_trajectories(
            &map,
            Point { x: 2.5, y: 2.5 },
            3,
            10,
            1.0,
            false,
            &mut rng(8),
        )
        .unwrap();
        for t in &out {
            assert_eq!(t.terminated, Termination::UninformativeCell);
            // One step (at the 1 m/s fallback) into the second cell... which
            // takes three steps from x = 2.5 to x >= 5.
            assert_eq!(t.points.len(), 4);
        }
    }

    #[test]
    fn trajgen_rejects_outside_start() {
        let map = single_cell_map(DirectionalPrimitive::uninformative(0));
        let err = generate_trajectories(
            &map,
            Point { x: 100.0, y: 0.0 },
            1,
            1,
            1.0,
            false,
            &mut rng(9),
        );
        assert!(matches!(err, Err(InferError::OutsideMap { .. })));
    }
}
