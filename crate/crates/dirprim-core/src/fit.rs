//! Fitting a primitive map: per-cell mode discovery, EM for the von Mises
//! mixture, and per-mode gamma speed fits.
//!
//! The pipeline per cell is: bin observations → DBSCAN over wrapped angles
//! decides the mode count and seeds the mixture → EM refines weights, means,
//! and concentrations → speeds within twice the circular standard deviation
//! of each mode get a gamma fit. Cells with too little data, or where no
//! cluster emerges, stay uninformative.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::angle::{circular_stats_weighted, Angle};
use crate::bessel;
use crate::cluster::{dbscan_angles, ClusterSummary};
use crate::grid::{
    bin_observations, CellIndex, DirectionalPrimitive, GridSpec, MapMetadata, PrimitiveMap,
    MIN_CELL_COUNT,
};
use crate::motion::MotionObservation;
use crate::speed::{self, GammaParams, MIN_SPEED_SAMPLES};
use crate::vonmises::{
    circular_std, kappa_from_rbar, VonMisesComponent, VonMisesMixture, KAPPA_MAX,
};

#[allow(unused_imports)]
use crate::float::*;

/// Components whose weight falls below this are starved: dropped, and the
/// cell is refitted with one mode fewer.
const STARVATION_WEIGHT: f64 = 1e-6;

const LN_TAU: f64 = 1.837_877_066_409_345_6;

#[derive(Debug, Clone, PartialEq)]
pub enum FitError {
    InvalidConfig(&'static str),
    NoObservations,
    NoSeeds,
    /// EM needs at least as many angles as mixture components.
    NotEnoughAngles {
        angles: usize,
        modes: usize,
    },
    InvalidSeed {
        index: usize,
    },
}

impl fmt::Display for FitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidConfig(what) => write!(f, "invalid fit config: {what}"),
            Self::NoObservations => write!(f, "cannot fit a map from zero observations"),
            Self::NoSeeds => write!(f, "EM needs at least one seed component"),
            Self::NotEnoughAngles { angles, modes } => {
                write!(
                    f,
                    "EM with {modes} modes needs >= {modes} angles, got {angles}"
                )
            }
            Self::InvalidSeed { index } => write!(f, "seed {index} has a non-positive weight"),
        }
    }
}

impl core::error::Error for FitError {}

/// Hyperparameters of the fitting pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// DBSCAN neighborhood radius over the wrapped metric, radians.
    pub dbscan_eps: f64,
    /// Core-point threshold is `max(floor, ceil(frac · n))` for a cell of n angles.
    pub dbscan_min_pts_floor: usize,
    pub dbscan_min_pts_frac: f64,
    /// EM stops when the relative log-likelihood change falls below this.
    pub em_tol: f64,
    pub em_max_iter: usize,
    /// Concentration cap applied after each M-step.
    pub kappa_cap: f64,
    /// Speed window half-width in circular standard deviations.
    pub speed_window: f64,
    /// Cells with fewer observations stay uninformative.
    pub min_cell_count: usize,
    /// Modes with fewer qualifying speed samples get no gamma model.
    pub min_speed_samples: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            dbscan_eps: 15.0_f64.to_radians(),
            dbscan_min_pts_floor: 5,
            dbscan_min_pts_frac: 0.01,
            em_tol: 1e-6,
            em_max_iter: 200,
            kappa_cap: KAPPA_MAX,
            speed_window: 2.0,
            min_cell_count: MIN_CELL_COUNT,
            min_speed_samples: MIN_SPEED_SAMPLES,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), FitError> {
        if !(self.dbscan_eps > 0.0 && self.dbscan_eps < PI) {
            return Err(FitError::InvalidConfig("dbscan_eps must be in (0, pi)"));
        }
        if !(self.dbscan_min_pts_frac >= 0.0 && self.dbscan_min_pts_frac <= 1.0) {
            return Err(FitError::InvalidConfig(
                "dbscan_min_pts_frac must be in [0, 1]",
            ));
        }
        if self.em_tol.is_nan() || self.em_tol <= 0.0 || self.em_max_iter == 0 {
            return Err(FitError::InvalidConfig(
                "em_tol must be > 0 and em_max_iter >= 1",
            ));
        }
        if self.kappa_cap.is_nan() || self.kappa_cap <= 0.0 || self.kappa_cap > KAPPA_MAX {
            return Err(FitError::InvalidConfig(
                "kappa_cap must be in (0, KAPPA_MAX]",
            ));
        }
        if self.speed_window.is_nan() || self.speed_window <= 0.0 {
            return Err(FitError::InvalidConfig("speed_window must be > 0"));
        }
        Ok(())
    }

    pub fn min_pts_for(&self, n: usize) -> usize {
        let frac = (self.dbscan_min_pts_frac * n as f64).ceil() as usize;
        self.dbscan_min_pts_floor.max(frac)
    }

    /// FNV-1a digest of the configuration, recorded in map metadata.
    pub fn digest(&self) -> u64 {
        let mut h = Fnv1a::new();
        h.write_f64(self.dbscan_eps);
        h.write_u64(self.dbscan_min_pts_floor as u64);
        h.write_f64(self.dbscan_min_pts_frac);
        h.write_f64(self.em_tol);
        h.write_u64(self.em_max_iter as u64);
        h.write_f64(self.kappa_cap);
        h.write_f64(self.speed_window);
        h.write_u64(self.min_cell_count as u64);
        h.write_u64(self.min_speed_samples as u64);
        h.finish()
    }
}

struct Fnv1a(u64);

impl Fnv1a {
    fn new() -> Self {
        Fnv1a(0xcbf2_9ce4_8422_2325)
    }

    fn write_u64(&mut self, v: u64) {
        for byte in v.to_le_bytes() {
            self.0 ^= byte as u64;
            self.0 = self.0.wrapping_mul(0x100_0000_01b3);
        }
    }

    fn write_f64(&mut self, v: f64) {
        self.write_u64(v.to_bits());
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

/// Density-based mode discovery for one cell's angles. An empty result
/// signals an uninformative cell.
pub fn discover_modes(angles: &[Angle], cfg: &FitConfig) -> Vec<ClusterSummary> {
    if angles.is_empty() {
        return Vec::new();
    }
    dbscan_angles(angles, cfg.dbscan_eps, cfg.min_pts_for(angles.len()))
}

/// Initial value of one EM component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmSeed {
    pub mean: Angle,
    pub kappa: f64,
    pub weight: f64,
}

/// Seeds from discovered clusters: cluster means, rbar-derived κ, and
/// size-proportional weights.
pub fn seeds_from_clusters(clusters: &[ClusterSummary], cfg: &FitConfig) -> Vec<EmSeed> {
    let total: usize = clusters.iter().map(|c| c.members.len()).sum();
    clusters
        .iter()
        .map(|c| EmSeed {
            mean: c.mean,
            kappa: kappa_from_rbar(c.rbar.min(1.0))
                .map(|k| k.kappa)
                .unwrap_or(0.0)
                .min(cfg.kappa_cap),
            weight: c.members.len() as f64 / total as f64,
        })
        .collect()
}

/// Deterministic seeds for a known mode count: the angles are recentered on
/// their circular mean, split into `m` contiguous quantile blocks, and each
/// block contributes its own circular statistics.
pub fn quantile_seeds(
    angles: &[Angle],
    m: usize,
    cfg: &FitConfig,
) -> Result<Vec<EmSeed>, FitError> {
    if m == 0 {
        return Err(FitError::NoSeeds);
    }
    if angles.len() < m {
        return Err(FitError::NotEnoughAngles {
            angles: angles.len(),
            modes: m,
        });
    }
    let stats = crate::angle::circular_stats(angles).expect("nonempty");
    let center = stats.mean.unwrap_or(Angle::new(0.0));
    let mut deviations: Vec<f64> = angles.iter().map(|a| a.signed_diff(center)).collect();
    deviations.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let n = deviations.len();
    let mut seeds = Vec::with_capacity(m);
    for j in 0..m {
        let lo = j * n / m;
        let hi = ((j + 1) * n / m).max(lo + 1);
        let block: Vec<Angle> = deviations[lo..hi]
            .iter()
            .map(|&d| Angle::new(center.radians() + d))
            .collect();
        let s = crate::angle::circular_stats(&block).expect("nonempty block");
        seeds.push(EmSeed {
            mean: s.mean.unwrap_or(center),
            kappa: kappa_from_rbar(s.rbar.min(1.0))
                .map(|k| k.kappa)
                .unwrap_or(0.0)
                .min(cfg.kappa_cap),
            weight: (hi - lo) as f64 / n as f64,
        });
    }
    Ok(seeds)
}

/// Result of one EM fit.
#[derive(Debug, Clone, PartialEq)]
pub struct EmFit {
    pub mixture: VonMisesMixture,
    pub log_likelihood: f64,
    /// Total E/M iterations, across restarts after component drops.
    pub iterations: usize,
    /// Log-likelihood after each iteration of the final (post-drop) run;
    /// non-decreasing up to numerical slack.
    pub ll_history: Vec<f64>,
    pub dropped_components: usize,
    /// Components whose concentration sits at the cap.
    pub saturated_components: usize,
}

/// Expectation-maximization for a von Mises mixture over wrapped angles.
///
/// E-step: responsibilities `r_nm ∝ w_m · VM(θ_n; μ_m, κ_m)`. M-step: weights
/// from mean responsibility, means and resultant lengths from
/// responsibility-weighted circular statistics, κ from the A-ratio inversion.
/// Stops when the relative log-likelihood change drops below `cfg.em_tol`.
/// Starved components are dropped and the fit restarts with one mode fewer.
pub fn em_fit(angles: &[Angle], seeds: &[EmSeed], cfg: &FitConfig) -> Result<EmFit, FitError> {
    cfg.validate()?;
    if seeds.is_empty() {
        return Err(FitError::NoSeeds);
    }
    if angles.len() < seeds.len() {
        return Err(FitError::NotEnoughAngles {
            angles: angles.len(),
            modes: seeds.len(),
        });
    }
    let mut means: Vec<Angle> = seeds.iter().map(|s| s.mean).collect();
    let mut kappas: Vec<f64> = seeds
        .iter()
        .map(|s| s.kappa.max(0.0).min(cfg.kappa_cap))
        .collect();
    let mut weights: Vec<f64> = {
        let mut w: Vec<f64> = seeds.iter().map(|s| s.weight).collect();
        let sum: f64 = w.iter().sum();
        for (i, v) in w.iter_mut().enumerate() {
            if !v.is_finite() || *v <= 0.0 {
                return Err(FitError::InvalidSeed { index: i });
            }
            *v /= sum;
        }
        w
    };

    let n = angles.len();
    let mut dropped = 0usize;
    let mut iterations = 0usize;
    let mut ll_history: Vec<f64> = Vec::new();
    let mut final_ll = f64::NEG_INFINITY;

    'fit: loop {
        let m = means.len();
        ll_history.clear();
        let mut resp = alloc::vec![0.0_f64; n * m];
        let mut ll_prev = f64::NEG_INFINITY;

        while iterations < cfg.em_max_iter {
            iterations += 1;

            // E-step, in the log domain; per-component normalizers hoisted.
            let ln_norm: Vec<f64> = kappas
                .iter()
                .map(|&k| -(LN_TAU + bessel::log_i0(k)))
                .collect();
            let ln_w: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
            let mut ll = 0.0;
            for (i, theta) in angles.iter().enumerate() {
                let row = &mut resp[i * m..(i + 1) * m];
                let mut max = f64::NEG_INFINITY;
                for j in 0..m {
                    let v = ln_w[j]
                        + kappas[j] * (theta.radians() - means[j].radians()).cos()
                        + ln_norm[j];
                    row[j] = v;
                    if v > max {
                        max = v;
                    }
                }
                let mut sum = 0.0;
                for v in row.iter_mut() {
                    *v = (*v - max).exp();
                    sum += *v;
                }
                for v in row.iter_mut() {
                    *v /= sum;
                }
                ll += max + sum.ln();
            }
            ll_history.push(ll);
            final_ll = ll;

            if ll_prev.is_finite() && (ll - ll_prev).abs() <= cfg.em_tol * ll_prev.abs().max(1.0) {
                break 'fit;
            }
            ll_prev = ll;

            // M-step.
            let mut wsums = alloc::vec![0.0_f64; m];
            for i in 0..n {
                for j in 0..m {
                    wsums[j] += resp[i * m + j];
                }
            }
            if m > 1 {
                if let Some(starved) = wsums
                    .iter()
                    .enumerate()
                    .find(|(_, &w)| w / (n as f64) < STARVATION_WEIGHT)
                    .map(|(j, _)| j)
                {
                    means.remove(starved);
                    kappas.remove(starved);
                    weights.remove(starved);
                    let sum: f64 = weights.iter().sum();
                    for w in weights.iter_mut() {
                        *w /= sum;
                    }
                    dropped += 1;
                    continue 'fit;
                }
            }
            let mut column = alloc::vec![0.0_f64; n];
            for j in 0..m {
                for i in 0..n {
                    column[i] = resp[i * m + j];
                }
                let stats = circular_stats_weighted(angles, &column)
                    .expect("responsibility sums are positive");
                if let Some(mean) = stats.mean {
                    means[j] = mean;
                }
                kappas[j] = kappa_from_rbar(stats.rbar.min(1.0))
                    .map(|k| k.kappa)
                    .unwrap_or(kappas[j])
                    .min(cfg.kappa_cap);
                weights[j] = wsums[j] / n as f64;
            }
            let sum: f64 = weights.iter().sum();
            for w in weights.iter_mut() {
                *w /= sum;
            }
        }
        break;
    }

    let saturated = kappas.iter().filter(|&&k| k >= cfg.kappa_cap).count();
    let components: Result<Vec<VonMisesComponent>, _> = means
        .iter()
        .zip(&kappas)
        .map(|(&mu, &k)| VonMisesComponent::new(mu, k))
        .collect();
    let sum: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= sum;
    }
    let mixture = VonMisesMixture::new(components.expect("kappas are capped"), weights)
        .expect("EM weights are positive and normalized");
    Ok(EmFit {
        mixture,
        log_likelihood: final_ll,
        iterations,
        ll_history,
        dropped_components: dropped,
        saturated_components: saturated,
    })
}

/// Per-mode gamma speed fits: each mode collects the observations within
/// `speed_window` circular standard deviations of its mean (an observation
/// may fall into several overlapping windows) and fits their speeds.
/// Degenerate selections yield no speed model for that mode.
pub fn fit_speed_modes(
    observations: &[MotionObservation],
    mixture: &VonMisesMixture,
    cfg: &FitConfig,
) -> Vec<Option<GammaParams>> {
    mixture
        .components()
        .iter()
        .map(|comp| {
            let window = cfg.speed_window * circular_std(comp.kappa());
            let speeds: Vec<f64> = observations
                .iter()
                .filter(|o| o.theta.dist(comp.mu()) <= window)
                .map(|o| o.speed)
                .collect();
            if speeds.len() < cfg.min_speed_samples {
                return None;
            }
            match speed::mle(&speeds) {
                Ok(g) => Some(g),
                // Newton can refuse degenerate data; fall back to moments.
                Err(_) => speed::method_of_moments(&speeds).ok(),
            }
        })
        .collect()
}

/// Per-cell fitting record.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFitReport {
    pub cell: CellIndex,
    pub observations: usize,
    /// Zero for uninformative cells.
    pub modes: usize,
    pub em_iterations: usize,
    pub log_likelihood: Option<f64>,
    pub dropped_components: usize,
    pub saturated_components: usize,
    pub wall_micros: Option<u64>,
}

/// Summary of a whole-map fit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitReport {
    pub total_observations: usize,
    pub outside_dropped: usize,
    pub cells_fitted: usize,
    /// Cells with data that still ended uninformative (below the count
    /// threshold or without clusters).
    pub cells_uninformative: usize,
    pub empty_cells: usize,
    pub dropped_components: usize,
    pub saturated_components: usize,
    /// One entry per cell that had any data, row-major order.
    pub cell_reports: Vec<CellFitReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub map: PrimitiveMap,
    pub report: FitReport,
}

/// Fits a primitive map from observations.
pub fn fit_map(
    observations: &[MotionObservation],
    spec: &GridSpec,
    cfg: &FitConfig,
) -> Result<FitOutcome, FitError> {
    fit_map_inner(observations, spec, cfg, None)
}

/// Like [`fit_map`], with a caller-supplied monotonic clock (microseconds)
/// so per-cell wall times land in the report. The core stays free of any
/// platform time source.
pub fn fit_map_timed(
    observations: &[MotionObservation],
    spec: &GridSpec,
    cfg: &FitConfig,
    now_micros: &mut dyn FnMut() -> u64,
) -> Result<FitOutcome, FitError> {
    fit_map_inner(observations, spec, cfg, Some(now_micros))
}

fn fit_map_inner(
    observations: &[MotionObservation],
    spec: &GridSpec,
    cfg: &FitConfig,
    mut now_micros: Option<&mut dyn FnMut() -> u64>,
) -> Result<FitOutcome, FitError> {
    cfg.validate()?;
    if observations.is_empty() {
        return Err(FitError::NoObservations);
    }
    let binned = bin_observations(spec, observations);
    let mut cells = Vec::with_capacity(spec.n_cells());
    let mut report = FitReport {
        total_observations: observations.len(),
        outside_dropped: binned.outside,
        ..FitReport::default()
    };

    for cell in spec.cell_indices() {
        let members = &binned.per_cell[spec.linear(cell)];
        if members.is_empty() {
            report.empty_cells += 1;
            cells.push(DirectionalPrimitive::uninformative(0));
            continue;
        }
        let t0 = now_micros.as_mut().map(|c| c());
        let cell_obs: Vec<MotionObservation> = members.iter().map(|&i| observations[i]).collect();
        let mut cell_report = CellFitReport {
            cell,
            observations: cell_obs.len(),
            modes: 0,
            em_iterations: 0,
            log_likelihood: None,
            dropped_components: 0,
            saturated_components: 0,
            wall_micros: None,
        };

        let primitive = if cell_obs.len() < cfg.min_cell_count {
            None
        } else {
            let angles: Vec<Angle> = cell_obs.iter().map(|o| o.theta).collect();
            let clusters = discover_modes(&angles, cfg);
            if clusters.is_empty() {
                None
            } else {
                let seeds = seeds_from_clusters(&clusters, cfg);
                match em_fit(&angles, &seeds, cfg) {
                    Ok(em) => {
                        let speeds = fit_speed_modes(&cell_obs, &em.mixture, cfg);
                        cell_report.modes = em.mixture.len();
                        cell_report.em_iterations = em.iterations;
                        cell_report.log_likelihood = Some(em.log_likelihood);
                        cell_report.dropped_components = em.dropped_components;
                        cell_report.saturated_components = em.saturated_components;
                        report.dropped_components += em.dropped_components;
                        report.saturated_components += em.saturated_components;
                        Some(
                            DirectionalPrimitive::fitted(em.mixture, speeds, cell_obs.len())
                                .expect("speed list length matches mixture"),
                        )
                    }
                    Err(_) => None,
                }
            }
        };

        if let Some(t0) = t0 {
            cell_report.wall_micros = now_micros.as_mut().map(|c| c().saturating_sub(t0));
        }
        match primitive {
            Some(p) => {
                report.cells_fitted += 1;
                cells.push(p);
            }
            None => {
                report.cells_uninformative += 1;
                cells.push(DirectionalPrimitive::uninformative(
                    cell_report.observations,
                ));
            }
        }
        report.cell_reports.push(cell_report);
    }

    let metadata = MapMetadata {
        config_digest: cfg.digest(),
        source: String::new(),
    };
    let map = PrimitiveMap::new(*spec, cells, metadata).expect("cell count matches spec");
    Ok(FitOutcome { map, report })
}
