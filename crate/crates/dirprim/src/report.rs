//! JSON payloads emitted by the CLI: fit and evaluation reports, fusion and
//! hallucination samples, generated trajectories.
//!
//! Angles inside JSON are radians; the degree convention stops at the flag
//! parser.

use serde::Serialize;

use dirprim_core::eval::{DensitySummary, ImprovementReport};
use dirprim_core::fit::FitReport;
use dirprim_core::infer::{FusedDirection, GeneratedTrajectory, Hallucination};

#[derive(Serialize)]
pub struct FitReportDto {
    pub seed: u64,
    pub total_observations: usize,
    pub outside_dropped: usize,
    pub cells_fitted: usize,
    pub cells_uninformative: usize,
    pub empty_cells: usize,
    pub dropped_components: usize,
    pub saturated_components: usize,
    pub cells: Vec<CellFitDto>,
}

#[derive(Serialize)]
pub struct CellFitDto {
    pub ix: usize,
    pub iy: usize,
    pub observations: usize,
    pub modes: usize,
    pub em_iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_likelihood: Option<f64>,
    pub dropped_components: usize,
    pub saturated_components: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_micros: Option<u64>,
}

impl FitReportDto {
    pub fn new(seed: u64, report: &FitReport) -> Self {
        FitReportDto {
            seed,
            total_observations: report.total_observations,
            outside_dropped: report.outside_dropped,
            cells_fitted: report.cells_fitted,
            cells_uninformative: report.cells_uninformative,
            empty_cells: report.empty_cells,
            dropped_components: report.dropped_components,
            saturated_components: report.saturated_components,
            cells: report
                .cell_reports
                .iter()
                .map(|c| CellFitDto {
                    ix: c.cell.ix,
                    iy: c.cell.iy,
                    observations: c.observations,
                    modes: c.modes,
                    em_iterations: c.em_iterations,
                    log_likelihood: c.log_likelihood,
                    dropped_components: c.dropped_components,
                    saturated_components: c.saturated_components,
                    wall_micros: c.wall_micros,
                })
                .collect(),
        }
    }
}

#[derive(Serialize)]
pub struct EvalConfigEcho {
    pub kappa_obs: f64,
    pub floor_speed_density: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split_fraction: Option<f64>,
}

#[derive(Serialize)]
pub struct DensityDto {
    pub mean: f64,
    pub std: f64,
}

impl From<DensitySummary> for DensityDto {
    fn from(s: DensitySummary) -> Self {
        DensityDto {
            mean: s.mean,
            std: s.std,
        }
    }
}

#[derive(Serialize)]
pub struct EvalReportDto {
    pub seed: u64,
    pub config: EvalConfigEcho,
    pub test_size: usize,
    pub direction: DensityDto,
    pub speed: DensityDto,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub improvement: Option<ImprovementDto>,
}

#[derive(Serialize)]
pub struct ImprovementDto {
    pub average_improvement_pct: f64,
    pub cells_evaluated: usize,
    pub cells_skipped: usize,
    pub total_prior_ll: f64,
    pub total_belief_ll: f64,
    pub total_posterior_ll: f64,
    pub cells: Vec<CellImprovementDto>,
}

#[derive(Serialize)]
pub struct CellImprovementDto {
    pub ix: usize,
    pub iy: usize,
    pub predecessor_ix: usize,
    pub predecessor_iy: usize,
    pub n_test: usize,
    pub prior_ll: f64,
    pub belief_ll: f64,
    pub posterior_ll: f64,
    pub improvement_pct: f64,
}

impl From<&ImprovementReport> for ImprovementDto {
    fn from(report: &ImprovementReport) -> Self {
        ImprovementDto {
            average_improvement_pct: report.average_improvement_pct,
            cells_evaluated: report.cells.len(),
            cells_skipped: report.skipped,
            total_prior_ll: report.total_prior_ll,
            total_belief_ll: report.total_belief_ll,
            total_posterior_ll: report.total_posterior_ll,
            cells: report
                .cells
                .iter()
                .map(|c| CellImprovementDto {
                    ix: c.cell.ix,
                    iy: c.cell.iy,
                    predecessor_ix: c.predecessor.ix,
                    predecessor_iy: c.predecessor.iy,
                    n_test: c.n_test,
                    prior_ll: c.prior_ll,
                    belief_ll: c.belief_ll,
                    posterior_ll: c.posterior_ll,
                    improvement_pct: c.improvement_pct,
                })
                .collect(),
        }
    }
}

#[derive(Serialize)]
pub struct HallucinationDto {
    pub seed: u64,
    pub uninformative: bool,
    pub samples: Vec<ProjectedDto>,
}

#[derive(Serialize)]
pub struct ProjectedDto {
    pub x: f64,
    pub y: f64,
    pub theta_rad: f64,
    pub speed: f64,
}

impl HallucinationDto {
    pub fn new(seed: u64, h: &Hallucination) -> Self {
        HallucinationDto {
            seed,
            uninformative: h.uninformative,
            samples: h
                .samples
                .iter()
                .map(|s| ProjectedDto {
                    x: s.position.x,
                    y: s.position.y,
                    theta_rad: s.angle.radians(),
                    speed: s.speed,
                })
                .collect(),
        }
    }
}

#[derive(Serialize)]
pub struct FuseDto {
    pub seed: u64,
    pub acceptance_rate: f64,
    pub samples_rad: Vec<f64>,
}

impl FuseDto {
    pub fn new(seed: u64, fused: &FusedDirection) -> Self {
        FuseDto {
            seed,
            acceptance_rate: fused.acceptance_rate,
            samples_rad: fused.samples.iter().map(|a| a.radians()).collect(),
        }
    }
}

#[derive(Serialize)]
pub struct TrajectoriesDto {
    pub seed: u64,
    pub trajectories: Vec<TrajectoryDto>,
}

#[derive(Serialize)]
pub struct TrajectoryDto {
    pub terminated: &'static str,
    pub points: Vec<PointDto>,
}

#[derive(Serialize)]
pub struct PointDto {
    pub x: f64,
    pub y: f64,
}

impl TrajectoriesDto {
    pub fn new(seed: u64, trajectories: &[GeneratedTrajectory]) -> Self {
        TrajectoriesDto {
            seed,
            trajectories: trajectories
                .iter()
                .map(|t| TrajectoryDto {
                    terminated: t.terminated.as_str(),
                    points: t
                        .points
                        .iter()
                        .map(|p| PointDto { x: p.x, y: p.y })
                        .collect(),
                })
                .collect(),
        }
    }
}
