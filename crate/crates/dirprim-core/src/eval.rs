//! Evaluation protocol: held-out splits, average probability density,
//! likelihood improvement from fusing a belief with the prior, and wrapped
//! angular RMSE.

use alloc::vec::Vec;
use core::f64::consts::TAU;
use core::fmt;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::angle::Angle;
use crate::grid::{CellIndex, PrimitiveMap};
use crate::infer::product_density;
use crate::motion::MotionObservation;
use crate::vonmises::{VonMisesComponent, VonMisesMixture};

#[allow(unused_imports)]
use crate::float::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvalError {
    EmptyInput,
    /// Split fraction must lie strictly between 0 and 1.
    InvalidFraction {
        fraction: f64,
    },
    InvalidArgument(&'static str),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyInput => write!(f, "evaluation needs a nonempty sample"),
            Self::InvalidFraction { fraction } => {
                write!(f, "split fraction must be in (0, 1), got {fraction}")
            }
            Self::InvalidArgument(what) => write!(f, "{what}"),
        }
    }
}

impl core::error::Error for EvalError {}

/// Seeded uniform split at the observation level: shuffle, then cut
/// `round(fraction · n)` observations into the test set.
pub fn split_test<R: Rng + ?Sized>(
    observations: &[MotionObservation],
    fraction: f64,
    rng: &mut R,
) -> Result<(Vec<MotionObservation>, Vec<MotionObservation>), EvalError> {
    if observations.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(EvalError::InvalidFraction { fraction });
    }
    let mut indices: Vec<usize> = (0..observations.len()).collect();
    indices.shuffle(rng);
    let n_test =
        ((fraction * observations.len() as f64).round() as usize).clamp(1, observations.len() - 1);
    let test = indices[..n_test].iter().map(|&i| observations[i]).collect();
    let train = indices[n_test..].iter().map(|&i| observations[i]).collect();
    Ok((train, test))
}

/// Mean and standard deviation of a density sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensitySummary {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

fn summarize(values: &[f64]) -> DensitySummary {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    DensitySummary {
        mean,
        std: var.sqrt(),
        n,
    }
}

/// Average direction density of the test set under the map. Observations in
/// uninformative cells (or outside the map) contribute the uniform `1/(2π)`.
pub fn avg_density_direction(
    map: &PrimitiveMap,
    test: &[MotionObservation],
) -> Result<DensitySummary, EvalError> {
    if test.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let densities: Vec<f64> = test
        .iter()
        .map(|o| match map.primitive_at(o.x, o.y) {
            Some(p) => p.direction_pdf(o.theta),
            None => 1.0 / TAU,
        })
        .collect();
    Ok(summarize(&densities))
}

/// Average speed density: each observation is scored under the gamma model
/// of the mode most responsible for its heading. Modes (or cells) without a
/// speed model contribute `floor_density`.
pub fn avg_density_speed(
    map: &PrimitiveMap,
    test: &[MotionObservation],
    floor_density: f64,
) -> Result<DensitySummary, EvalError> {
    if test.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    if floor_density.is_nan() || floor_density < 0.0 {
        return Err(EvalError::InvalidArgument("floor_density must be >= 0"));
    }
    let densities: Vec<f64> = test
        .iter()
        .map(|o| {
            map.primitive_at(o.x, o.y)
                .and_then(|p| {
                    p.mixture().and_then(|m| {
                        p.speed_modes()[m.responsibility_argmax(o.theta)]
                            .as_ref()
                            .and_then(|g| g.pdf(o.speed).ok())
                    })
                })
                .unwrap_or(floor_density)
        })
        .collect();
    Ok(summarize(&densities))
}

/// Configuration of the likelihood-improvement experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ImprovementConfig {
    /// Concentration of the synthesized belief distribution.
    pub kappa_obs: f64,
    /// Trapezoid grid used to normalize the fused product.
    pub normalization_grid: usize,
}

impl Default for ImprovementConfig {
    fn default() -> Self {
        ImprovementConfig {
            kappa_obs: 2.5,
            normalization_grid: 3600,
        }
    }
}

/// Percentage improvement of the posterior likelihood over the belief
/// likelihood.
pub fn improvement_pct(l_star: f64, l_t: f64) -> f64 {
    (l_star - l_t) / l_t * 100.0
}

/// Log of the numerically normalized product `p_*` at `theta`.
pub fn normalized_product_log_pdf(
    prior: &VonMisesMixture,
    belief: &VonMisesMixture,
    grid: usize,
    theta: Angle,
) -> f64 {
    let z = product_normalizer(prior, belief, grid);
    (prior.log_pdf(theta) + belief.log_pdf(theta)) - z.ln()
}

/// Trapezoid-rule mass of the unnormalized product over `[0, 2π)`.
pub fn product_normalizer(prior: &VonMisesMixture, belief: &VonMisesMixture, grid: usize) -> f64 {
    let n = grid.max(16);
    let h = TAU / n as f64;
    // Periodic integrand: the trapezoid rule over a full period is a plain
    // average of grid values.
    let sum: f64 = (0..n)
        .map(|i| product_density(prior, belief, Angle::new(i as f64 * h)))
        .sum();
    sum * h
}

/// One evaluated cell of the improvement experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct CellImprovement {
    pub cell: CellIndex,
    pub predecessor: CellIndex,
    pub n_test: usize,
    /// Σ log prior density over the cell's test points.
    pub prior_ll: f64,
    /// Σ log belief density.
    pub belief_ll: f64,
    /// Σ log normalized posterior density.
    pub posterior_ll: f64,
    pub improvement_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ImprovementReport {
    pub cells: Vec<CellImprovement>,
    /// Cells skipped for lack of test data or a fitted predecessor.
    pub skipped: usize,
    pub average_improvement_pct: f64,
    pub total_prior_ll: f64,
    pub total_belief_ll: f64,
    pub total_posterior_ll: f64,
}

/// The observation proxy: a unimodal belief pointed along the most probable
/// direction of the cell one step *against* the evaluated cell's dominant
/// flow (the cell a vehicle would have come from).
pub fn predecessor_belief(
    map: &PrimitiveMap,
    cell: CellIndex,
    kappa_obs: f64,
) -> Option<(CellIndex, VonMisesMixture)> {
    let mixture = map.cell(cell).mixture()?;
    let flow = mixture.most_probable_direction(720);
    let (cx, cy) = map.spec().cell_center(cell);
    let step = map.spec().cell_size;
    let px = cx - step * flow.radians().cos();
    let py = cy - step * flow.radians().sin();
    let pred = map.spec().locate(px, py)?;
    if pred == cell {
        return None;
    }
    let pred_mixture = map.cell(pred).mixture()?;
    let direction = pred_mixture.most_probable_direction(720);
    let belief = VonMisesMixture::single(VonMisesComponent::new(direction, kappa_obs).ok()?);
    Some((pred, belief))
}

/// Likelihood-improvement experiment over `eval_cells`.
///
/// Per cell: `L₀ = Σ log p₀`, `L_t = Σ log p_t` with the belief supplied by
/// `belief_for` (see [`predecessor_belief`] for the default proxy), and
/// `L_* = Σ log p̂_*` under the grid-normalized product. The improvement is
/// `(L_* − L_t)/L_t · 100`. Cells without a belief or without test points
/// are skipped.
pub fn likelihood_improvement<F>(
    map: &PrimitiveMap,
    eval_cells: &[CellIndex],
    test: &[MotionObservation],
    cfg: &ImprovementConfig,
    mut belief_for: F,
) -> ImprovementReport
where
    F: FnMut(CellIndex, &PrimitiveMap) -> Option<(CellIndex, VonMisesMixture)>,
{
    let mut report = ImprovementReport::default();
    for &cell in eval_cells {
        let prior = match map.cell(cell).mixture() {
            Some(m) => m.clone(),
            None => {
                report.skipped += 1;
                continue;
            }
        };
        let points: Vec<Angle> = test
            .iter()
            .filter(|o| map.spec().locate(o.x, o.y) == Some(cell))
            .map(|o| o.theta)
            .collect();
        if points.is_empty() {
            report.skipped += 1;
            continue;
        }
        let (predecessor, belief) = match belief_for(cell, map) {
            Some(b) => b,
            None => {
                report.skipped += 1;
                continue;
            }
        };
        let z = product_normalizer(&prior, &belief, cfg.normalization_grid);
        let ln_z = z.ln();
        let mut prior_ll = 0.0;
        let mut belief_ll = 0.0;
        let mut posterior_ll = 0.0;
        for &theta in &points {
            let lp = prior.log_pdf(theta);
            let lt = belief.log_pdf(theta);
            prior_ll += lp;
            belief_ll += lt;
            posterior_ll += lp + lt - ln_z;
        }
        report.cells.push(CellImprovement {
            cell,
            predecessor,
            n_test: points.len(),
            prior_ll,
            belief_ll,
            posterior_ll,
            improvement_pct: improvement_pct(posterior_ll, belief_ll),
        });
        report.total_prior_ll += prior_ll;
        report.total_belief_ll += belief_ll;
        report.total_posterior_ll += posterior_ll;
    }
    if !report.cells.is_empty() {
        report.average_improvement_pct =
            report.cells.iter().map(|c| c.improvement_pct).sum::<f64>() / report.cells.len() as f64;
    }
    report
}

/// Root-mean-square wrapped angular error against a single truth, in
/// degrees. Differences are reduced into `(−180°, 180°]`.
pub fn rmse_angles(samples: &[Angle], truth: Angle) -> Result<f64, EvalError> {
    if samples.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let sum_sq: f64 = samples
        .iter()
        .map(|s| {
            let d = s.signed_diff(truth).to_degrees();
            d * d
        })
        .sum();
    Ok((sum_sq / samples.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{DirectionalPrimitive, GridSpec, MapMetadata};
    use crate::speed::GammaParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn obs(x: f64, y: f64, theta_deg: f64, speed: f64) -> MotionObservation {
        MotionObservation {
            x,
            y,
            theta: Angle::from_degrees(theta_deg),
            speed,
        }
    }

    #[test]
    fn split_is_exact_and_seeded() {
        let observations: Vec<MotionObservation> =
            (0..1000).map(|i| obs(i as f64, 0.0, 0.0, 1.0)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (train, test) = split_test(&observations, 0.10, &mut rng).unwrap();
        assert_eq!(test.len(), 100);
        assert_eq!(train.len(), 900);

        let mut rng2 = ChaCha8Rng::seed_from_u64(1);
        let (train2, test2) = split_test(&observations, 0.10, &mut rng2).unwrap();
        assert_eq!(test, test2);
        assert_eq!(train, train2);
    }

    #[test]
    fn split_rejects_bad_fractions() {
        let observations = alloc::vec![obs(0.0, 0.0, 0.0, 1.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(matches!(
            split_test(&observations, 0.0, &mut rng),
            Err(EvalError::InvalidFraction { .. })
        ));
        assert!(matches!(
            split_test(&observations, 1.0, &mut rng),
            Err(EvalError::InvalidFraction { .. })
        ));
        assert!(matches!(
            split_test(&[], 0.5, &mut rng),
            Err(EvalError::EmptyInput)
        ));
    }

    #[test]
    fn uniform_map_scores_exactly_one_over_tau() {
        let spec = GridSpec::new(0.0, 0.0, 5.0, 2, 2).unwrap();
        let map = PrimitiveMap::uniform(spec);
        let test: Vec<MotionObservation> = (0..50)
            .map(|i| obs(i as f64 % 9.0, 3.0, (i * 7) as f64, 2.0))
            .collect();
        let summary = avg_density_direction(&map, &test).unwrap();
        assert!((summary.mean - 1.0 / TAU).abs() < 1e-15);
        assert!(summary.std < 1e-12);
    }

    #[test]
    fn fitted_cell_scores_above_uniform_on_matching_data() {
        let spec = GridSpec::new(0.0, 0.0, 5.0, 1, 1).unwrap();
        let mixture = VonMisesMixture::single(
            VonMisesComponent::new(Angle::from_degrees(0.0), 20.0).unwrap(),
        );
        let map = PrimitiveMap::new(
            spec,
            alloc::vec![DirectionalPrimitive::fitted(mixture, alloc::vec![None], 100).unwrap()],
            MapMetadata::default(),
        )
        .unwrap();
        let test: Vec<MotionObservation> = (0..30)
            .map(|i| obs(2.0, 2.0, (i % 10) as f64 - 5.0, 2.0))
            .collect();
        let fitted = avg_density_direction(&map, &test).unwrap();
        let uniform = avg_density_direction(&PrimitiveMap::uniform(spec), &test).unwrap();
        assert!(fitted.mean > uniform.mean);
    }

    #[test]
    fn speed_density_uses_matched_mode_and_floor() {
        let spec = GridSpec::new(0.0, 0.0, 5.0, 1, 1).unwrap();
        let east = VonMisesComponent::new(Angle::from_degrees(0.0), 50.0).unwrap();
        let west = VonMisesComponent::new(Angle::from_degrees(180.0), 50.0).unwrap();
        let gamma = GammaParams::new(25.0, 5.0).unwrap(); // mean 5
        let mixture = VonMisesMixture::new(alloc::vec![east, west], alloc::vec![0.5, 0.5]).unwrap();
        let map = PrimitiveMap::new(
            spec,
            alloc::vec![
                DirectionalPrimitive::fitted(mixture, alloc::vec![Some(gamma), None], 100).unwrap()
            ],
            MapMetadata::default(),
        )
        .unwrap();

        // Observation at the gamma mean, heading east: density equals pdf(mean).
        let summary = avg_density_speed(&map, &[obs(1.0, 1.0, 0.0, 5.0)], 1e-3).unwrap();
        assert!((summary.mean - gamma.pdf(5.0).unwrap()).abs() < 1e-15);

        // Heading west: that mode has no model, so the floor applies.
        let summary = avg_density_speed(&map, &[obs(1.0, 1.0, 180.0, 5.0)], 1e-3).unwrap();
        assert_eq!(summary.mean, 1e-3);

        // Uninformative map: all floor.
        let summary = avg_density_speed(
            &PrimitiveMap::uniform(spec),
            &[obs(1.0, 1.0, 0.0, 5.0), obs(2.0, 2.0, 90.0, 3.0)],
            1e-3,
        )
        .unwrap();
        assert_eq!(summary.mean, 1e-3);
        assert_eq!(summary.std, 0.0);
    }

    #[test]
    fn density_at_the_dominant_mean_matches_closed_form() {
        // Trimodal cell with lobes 45° apart at κ = 20: the density at the
        // dominant mean is 0.5·e²⁰/(2π I₀(20)) plus two side terms, frozen
        // from the Bessel quadrature oracle.
        let spec = GridSpec::new(0.0, 0.0, 5.0, 1, 1).unwrap();
        let mixture = VonMisesMixture::new(
            alloc::vec![
                VonMisesComponent::new(Angle::from_degrees(-45.0), 20.0).unwrap(),
                VonMisesComponent::new(Angle::from_degrees(0.0), 20.0).unwrap(),
                VonMisesComponent::new(Angle::from_degrees(45.0), 20.0).unwrap(),
            ],
            alloc::vec![0.25, 0.5, 0.25],
        )
        .unwrap();
        let map = PrimitiveMap::new(
            spec,
            alloc::vec![DirectionalPrimitive::fitted(mixture, alloc::vec![None; 3], 50).unwrap()],
            MapMetadata::default(),
        )
        .unwrap();
        let summary = avg_density_direction(&map, &[obs(2.0, 2.0, 0.0, 1.0)]).unwrap();
        assert!((summary.mean - 0.8888903336734169).abs() < 1e-9);
    }

    #[test]
    fn improvement_formula() {
        assert!((improvement_pct(150.0, 100.0) - 50.0).abs() < 1e-12);
    }

    #[test]
    fn normalized_product_integrates_to_one() {
        let prior = VonMisesMixture::single(
            VonMisesComponent::new(Angle::from_degrees(10.0), 3.0).unwrap(),
        );
        let belief = VonMisesMixture::single(
            VonMisesComponent::new(Angle::from_degrees(40.0), 2.0).unwrap(),
        );
        let n = 3600;
        let h = TAU / n as f64;
        let mass: f64 = (0..n)
            .map(|i| normalized_product_log_pdf(&prior, &belief, n, Angle::new(i as f64 * h)).exp())
            .sum::<f64>()
            * h;
        assert!((mass - 1.0).abs() < 1e-9, "mass = {mass}");
    }

    #[test]
    fn orthogonal_belief_worsens_likelihood() {
        // Prior at 0° fits the data; a belief at 90° scores poorly, and the
        // posterior cannot recover the loss relative to the belief's own
        // (negative) log-likelihood.
        let spec = GridSpec::new(0.0, 0.0, 5.0, 2, 1).unwrap();
        let prior_mix = VonMisesMixture::single(
            VonMisesComponent::new(Angle::from_degrees(0.0), 20.0).unwrap(),
        );
        let map = PrimitiveMap::new(
            spec,
            alloc::vec![
                DirectionalPrimitive::fitted(prior_mix.clone(), alloc::vec![None], 50).unwrap(),
                DirectionalPrimitive::fitted(prior_mix, alloc::vec![None], 50).unwrap(),
            ],
            MapMetadata::default(),
        )
        .unwrap();
        let cell = CellIndex { ix: 1, iy: 0 };
        let test: Vec<MotionObservation> = (0..40)
            .map(|i| obs(7.0, 2.0, (i % 11) as f64 - 5.0, 2.0))
            .collect();
        let cfg = ImprovementConfig::default();
        let orthogonal = VonMisesMixture::single(
            VonMisesComponent::new(Angle::from_degrees(90.0), 2.5).unwrap(),
        );
        let report = likelihood_improvement(&map, &[cell], &test, &cfg, |c, _| {
            (c == cell).then(|| (CellIndex { ix: 0, iy: 0 }, orthogonal.clone()))
        });
        assert_eq!(report.cells.len(), 1);
        assert!(report.cells[0].improvement_pct < 0.0);
        assert!(report.cells[0].belief_ll < 0.0);
        assert!(report.cells[0].posterior_ll > report.cells[0].belief_ll);
    }

    #[test]
    fn cells_without_predecessor_are_skipped() {
        let spec = GridSpec::new(0.0, 0.0, 5.0, 2, 1).unwrap();
        let east = VonMisesMixture::single(
            VonMisesComponent::new(Angle::from_degrees(0.0), 20.0).unwrap(),
        );
        // Only cell (1,0) is fitted: its predecessor (0,0) is uninformative.
        let map = PrimitiveMap::new(
            spec,
            alloc::vec![
                DirectionalPrimitive::uninformative(0),
                DirectionalPrimitive::fitted(east, alloc::vec![None], 50).unwrap(),
            ],
            MapMetadata::default(),
        )
        .unwrap();
        let cell = CellIndex { ix: 1, iy: 0 };
        assert!(predecessor_belief(&map, cell, 2.5).is_none());
        let test = alloc::vec![obs(7.0, 2.0, 0.0, 2.0)];
        let report = likelihood_improvement(
            &map,
            &[cell],
            &test,
            &ImprovementConfig::default(),
            |c, m| predecessor_belief(m, c, 2.5),
        );
        assert!(report.cells.is_empty());
        assert_eq!(report.skipped, 1);
    }

    #[test]
    fn rmse_basics() {
        let truth = Angle::from_degrees(0.0);
        let same = alloc::vec![truth; 5];
        assert_eq!(rmse_angles(&same, truth).unwrap(), 0.0);

        let split = alloc::vec![Angle::from_degrees(90.0), Angle::from_degrees(-90.0)];
        assert!((rmse_angles(&split, truth).unwrap() - 90.0).abs() < 1e-12);

        let wrapped = alloc::vec![Angle::from_degrees(350.0)];
        let t10 = Angle::from_degrees(10.0);
        assert!((rmse_angles(&wrapped, t10).unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn rmse_invariant_to_full_turns() {
        let samples = alloc::vec![
            Angle::new(0.2),
            Angle::new(0.2 + TAU),
            Angle::new(1.5 - TAU),
        ];
        let truth = Angle::new(0.4);
        let shifted = Angle::new(0.4 + TAU);
        let a = rmse_angles(&samples, truth).unwrap();
        let b = rmse_angles(&samples, shifted).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn rmse_empty_is_error() {
        assert!(matches!(
            rmse_angles(&[], Angle::new(0.0)),
            Err(EvalError::EmptyInput)
        ));
    }
}
