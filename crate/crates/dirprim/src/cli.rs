//! The `dirprim` command-line tool.
//!
//! Subcommands: `synth`, `fit`, `eval`, `hallucinate`, `fuse`, `trajgen`,
//! `export-polar`. All randomness flows from `--seed` (default 42). Angle
//! flags are degrees; JSON payloads carry radians. Reports go to stdout
//! unless `--out` is given; artifacts (CSV, models) always go to files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use dirprim_core::angle::Angle;
use dirprim_core::eval::{self, ImprovementConfig};
use dirprim_core::fit::{fit_map_timed, FitConfig, FitError};
use dirprim_core::grid::{CellIndex, GridSpec};
use dirprim_core::infer::{self, FuseConfig, InferError};
use dirprim_core::motion::{derive_motion, MotionObservation, Point};
use dirprim_core::synth::{
    self, CorridorConfig, RoundaboutConfig, Scenario, SynthError, ThreeWayConfig,
};
use dirprim_core::vonmises::{VonMisesComponent, VonMisesMixture};

use crate::config::{pick, FileConfig};
use crate::csvio::{self, CsvError};
use crate::modelio::{self, ModelIoError};
use crate::report::{
    EvalConfigEcho, EvalReportDto, FitReportDto, FuseDto, HallucinationDto, ImprovementDto,
    TrajectoriesDto,
};

pub const DEFAULT_SEED: u64 = 42;

/// Exit codes: 0 success, 2 usage, 3 I/O, 4 bad data or domain, 5 fusion
/// failure.
#[derive(Debug)]
pub enum AppError {
    Usage(String),
    Io(String),
    Domain(String),
    Fusion(String),
}

impl AppError {
    pub fn code(&self) -> u8 {
        match self {
            AppError::Usage(_) => 2,
            AppError::Io(_) => 3,
            AppError::Domain(_) => 4,
            AppError::Fusion(_) => 5,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            AppError::Usage(m) | AppError::Io(m) | AppError::Domain(m) | AppError::Fusion(m) => m,
        }
    }
}

impl From<CsvError> for AppError {
    fn from(e: CsvError) -> Self {
        match e {
            CsvError::Io(_) => AppError::Io(e.to_string()),
            _ => AppError::Domain(e.to_string()),
        }
    }
}

impl From<ModelIoError> for AppError {
    fn from(e: ModelIoError) -> Self {
        match e {
            ModelIoError::Io(_) => AppError::Io(e.to_string()),
            _ => AppError::Domain(e.to_string()),
        }
    }
}

impl From<SynthError> for AppError {
    fn from(e: SynthError) -> Self {
        AppError::Usage(e.to_string())
    }
}

impl From<FitError> for AppError {
    fn from(e: FitError) -> Self {
        match e {
            FitError::InvalidConfig(_) => AppError::Usage(e.to_string()),
            _ => AppError::Domain(e.to_string()),
        }
    }
}

impl From<InferError> for AppError {
    fn from(e: InferError) -> Self {
        match e {
            InferError::FusionDegenerate | InferError::FusionDidNotConverge { .. } => {
                AppError::Fusion(e.to_string())
            }
            InferError::InvalidArgument(_) => AppError::Usage(e.to_string()),
            InferError::OutsideMap { .. } => AppError::Domain(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "dirprim",
    version,
    about = "Learn and use location-dependent direction/speed priors from trajectory data"
)]
pub struct Cli {
    /// Seed for all randomness (default 42).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON config file providing flag defaults (flags win).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate a synthetic trajectory CSV.
    Synth(SynthArgs),
    /// Fit a primitive map from a trajectory CSV.
    Fit(FitArgs),
    /// Evaluate a model on a test CSV.
    Eval(EvalArgs),
    /// Sample next positions from a cell's primitive.
    Hallucinate(HallucinateArgs),
    /// Fuse the prior at a position with a belief distribution.
    Fuse(FuseArgs),
    /// Roll out trajectories from a start position.
    Trajgen(TrajgenArgs),
    /// Export per-cell direction densities for polar plotting.
    ExportPolar(ExportPolarArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioKind {
    Corridor,
    #[value(alias = "three_way")]
    ThreeWay,
    Roundabout,
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub scenario: ScenarioKind,
    #[arg(long)]
    pub tracks: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub speed_mean: Option<f64>,
    #[arg(long)]
    pub speed_std: Option<f64>,
    #[arg(long)]
    pub heading_kappa: Option<f64>,
    /// Corridor width in meters.
    #[arg(long)]
    pub width: Option<f64>,
    /// Three-way: steps before the junction line.
    #[arg(long)]
    pub approach_steps: Option<usize>,
    /// Three-way: straight,left,right probabilities.
    #[arg(long, value_delimiter = ',')]
    pub branch_weights: Option<Vec<f64>>,
    /// Roundabout radius in meters.
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub radial_noise: Option<f64>,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
pub struct FitArgs {
    /// Input trajectory CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Cell size in meters (default 5).
    #[arg(long)]
    pub cell_size: Option<f64>,
    /// Explicit grid origin/extent; all four or none (default: cover data).
    #[arg(long)]
    pub origin_x: Option<f64>,
    #[arg(long)]
    pub origin_y: Option<f64>,
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub ny: Option<usize>,
    /// DBSCAN neighborhood radius in degrees.
    #[arg(long)]
    pub dbscan_eps_deg: Option<f64>,
    #[arg(long)]
    pub dbscan_min_pts_floor: Option<usize>,
    #[arg(long)]
    pub dbscan_min_pts_frac: Option<f64>,
    #[arg(long)]
    pub em_tol: Option<f64>,
    #[arg(long)]
    pub em_max_iter: Option<usize>,
    /// Speed window half-width in circular standard deviations.
    #[arg(long)]
    pub speed_window: Option<f64>,
    #[arg(long)]
    pub min_cell_count: Option<usize>,
    #[arg(long)]
    pub min_speed_samples: Option<usize>,
    /// Output model JSON path.
    #[arg(long)]
    pub out: PathBuf,
    /// Write the fit report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Test trajectory CSV.
    #[arg(long)]
    pub test: PathBuf,
    /// Treat --test as a full dataset and evaluate on a seeded holdout of
    /// this fraction.
    #[arg(long)]
    pub split: Option<f64>,
    /// Also run the likelihood-improvement experiment.
    #[arg(long)]
    pub improvement: bool,
    /// Belief concentration for the observation proxy (degrees-free).
    #[arg(long)]
    pub kappa_obs: Option<f64>,
    /// Density charged to observations without a speed model.
    #[arg(long)]
    pub floor_speed_density: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a per-cell density breakdown CSV.
    #[arg(long)]
    pub cells_out: Option<PathBuf>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
pub struct HallucinateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub x: f64,
    #[arg(long)]
    pub y: f64,
    /// Number of samples.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Draw speeds from the per-mode gamma models.
    #[arg(long)]
    pub use_speed: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
pub struct FuseArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub x: f64,
    #[arg(long)]
    pub y: f64,
    /// Belief mean direction in degrees.
    #[arg(long)]
    pub belief_mu: f64,
    /// Belief concentration (0 = uniform).
    #[arg(long)]
    pub belief_kappa: f64,
    /// Accepted samples to draw.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long)]
    pub proposal_kappa: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
pub struct TrajgenArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub x0: f64,
    #[arg(long)]
    pub y0: f64,
    /// Number of trajectories.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Maximum steps per trajectory.
    #[arg(long, default_value_t = 50)]
    pub t: usize,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub use_speed: bool,
    #[arg(long, value_enum, default_value_t = TrajFormat::Json)]
    pub format: TrajFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrajFormat {
    Json,
    Csv,
}

#[derive(Args)]
pub struct ExportPolarArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Cell to export, as `ix,iy`.
    #[arg(long, value_delimiter = ',', conflicts_with = "all")]
    pub cell: Option<Vec<usize>>,
    /// Export every cell.
    #[arg(long)]
    pub all: bool,
    /// Angular bins per cell.
    #[arg(long, default_value_t = 360)]
    pub bins: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<(), AppError> {
    let file_cfg = match &cli.config {
        Some(path) => FileConfig::load(path).map_err(AppError::Usage)?,
        None => FileConfig::default(),
    };
    let seed = cli.seed.or(file_cfg.seed).unwrap_or(DEFAULT_SEED);
    match cli.command {
        Command::Synth(args) => cmd_synth(args, &file_cfg, seed),
        Command::Fit(args) => cmd_fit(args, &file_cfg, seed),
        Command::Eval(args) => cmd_eval(args, &file_cfg, seed),
        Command::Hallucinate(args) => cmd_hallucinate(args, &file_cfg, seed),
        Command::Fuse(args) => cmd_fuse(args, &file_cfg, seed),
        Command::Trajgen(args) => cmd_trajgen(args, &file_cfg, seed),
        Command::ExportPolar(args) => cmd_export_polar(args),
    }
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), AppError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| AppError::Domain(format!("cannot serialize output: {e}")))?;
    write_text(&format!("{text}\n"), out)
}

fn write_text(text: &str, out: Option<&Path>) -> Result<(), AppError> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| AppError::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            std::io::stdout().flush().ok();
            Ok(())
        }
    }
}

fn load_observations(path: &Path) -> Result<Vec<MotionObservation>, AppError> {
    let (tracks, stats) = csvio::parse_trajectories(path)?;
    if stats.skipped_tracks > 0 {
        eprintln!(
            "warning: skipped {} track(s) with invalid timestamps",
            stats.skipped_tracks
        );
    }
    let observations: Vec<MotionObservation> = tracks.iter().flat_map(derive_motion).collect();
    if observations.is_empty() {
        return Err(AppError::Domain(format!(
            "{}: no motion observations (all segments below the speed floor?)",
            path.display()
        )));
    }
    Ok(observations)
}

fn cmd_synth(args: SynthArgs, file_cfg: &FileConfig, seed: u64) -> Result<(), AppError> {
    let s = file_cfg.synth.clone().unwrap_or_default();
    let scenario = match args.scenario {
        ScenarioKind::Corridor => {
            let d = CorridorConfig::default();
            Scenario::Corridor(CorridorConfig {
                tracks: pick(args.tracks, s.tracks, d.tracks),
                steps: pick(args.steps, s.steps, d.steps),
                dt: pick(args.dt, s.dt, d.dt),
                speed_mean: pick(args.speed_mean, s.speed_mean, d.speed_mean),
                speed_std: pick(args.speed_std, s.speed_std, d.speed_std),
                heading_kappa: pick(args.heading_kappa, s.heading_kappa, d.heading_kappa),
                width: pick(args.width, s.width, d.width),
            })
        }
        ScenarioKind::ThreeWay => {
            let d = ThreeWayConfig::default();
            let weights = match args.branch_weights.as_deref() {
                Some([a, b, c]) => Some([*a, *b, *c]),
                Some(_) => {
                    return Err(AppError::Usage(
                        "--branch-weights needs 3 values".to_string(),
                    ))
                }
                None => None,
            };
            Scenario::ThreeWay(ThreeWayConfig {
                tracks: pick(args.tracks, s.tracks, d.tracks),
                steps: pick(args.steps, s.steps, d.steps),
                approach_steps: pick(args.approach_steps, s.approach_steps, d.approach_steps),
                dt: pick(args.dt, s.dt, d.dt),
                speed_mean: pick(args.speed_mean, s.speed_mean, d.speed_mean),
                speed_std: pick(args.speed_std, s.speed_std, d.speed_std),
                heading_kappa: pick(args.heading_kappa, s.heading_kappa, d.heading_kappa),
                branch_weights: pick(weights, s.branch_weights, d.branch_weights),
                lane_x: d.lane_x,
            })
        }
        ScenarioKind::Roundabout => {
            let d = RoundaboutConfig::default();
            Scenario::Roundabout(RoundaboutConfig {
                tracks: pick(args.tracks, s.tracks, d.tracks),
                steps: pick(args.steps, s.steps, d.steps),
                dt: pick(args.dt, s.dt, d.dt),
                speed_mean: pick(args.speed_mean, s.speed_mean, d.speed_mean),
                speed_std: pick(args.speed_std, s.speed_std, d.speed_std),
                radius: pick(args.radius, s.radius, d.radius),
                radial_noise: pick(args.radial_noise, s.radial_noise, d.radial_noise),
            })
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tracks = synth::generate(&scenario, &mut rng)?;
    csvio::write_trajectories(&args.out, &tracks)?;
    eprintln!("wrote {} tracks to {}", tracks.len(), args.out.display());
    Ok(())
}

fn fit_config_from(args: &FitArgs, file_cfg: &FileConfig) -> FitConfig {
    let f = file_cfg.fit.clone().unwrap_or_default();
    let d = FitConfig::default();
    FitConfig {
        dbscan_eps: pick(
            args.dbscan_eps_deg.map(|deg| deg.to_radians()),
            f.dbscan_eps_deg.map(|deg| deg.to_radians()),
            d.dbscan_eps,
        ),
        dbscan_min_pts_floor: pick(
            args.dbscan_min_pts_floor,
            f.dbscan_min_pts_floor,
            d.dbscan_min_pts_floor,
        ),
        dbscan_min_pts_frac: pick(
            args.dbscan_min_pts_frac,
            f.dbscan_min_pts_frac,
            d.dbscan_min_pts_frac,
        ),
        em_tol: pick(args.em_tol, f.em_tol, d.em_tol),
        em_max_iter: pick(args.em_max_iter, f.em_max_iter, d.em_max_iter),
        kappa_cap: d.kappa_cap,
        speed_window: pick(args.speed_window, f.speed_window, d.speed_window),
        min_cell_count: pick(args.min_cell_count, f.min_cell_count, d.min_cell_count),
        min_speed_samples: pick(
            args.min_speed_samples,
            f.min_speed_samples,
            d.min_speed_samples,
        ),
    }
}

fn cmd_fit(args: FitArgs, file_cfg: &FileConfig, seed: u64) -> Result<(), AppError> {
    let observations = load_observations(&args.input)?;
    let cell_size = pick(
        args.cell_size,
        file_cfg.fit.as_ref().and_then(|f| f.cell_size),
        5.0,
    );
    let explicit = [
        args.origin_x.is_some(),
        args.origin_y.is_some(),
        args.nx.is_some(),
        args.ny.is_some(),
    ];
    let spec = if explicit.iter().all(|&b| b) {
        GridSpec::new(
            args.origin_x.unwrap(),
            args.origin_y.unwrap(),
            cell_size,
            args.nx.unwrap(),
            args.ny.unwrap(),
        )
        .map_err(|e| AppError::Usage(e.to_string()))?
    } else if explicit.iter().any(|&b| b) {
        return Err(AppError::Usage(
            "--origin-x, --origin-y, --nx, --ny must be given together".to_string(),
        ));
    } else {
        let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
        for o in &observations {
            min_x = min_x.min(o.x);
            max_x = max_x.max(o.x);
            min_y = min_y.min(o.y);
            max_y = max_y.max(o.y);
        }
        GridSpec::covering(min_x, max_x, min_y, max_y, cell_size)
            .map_err(|e| AppError::Usage(e.to_string()))?
    };

    let cfg = fit_config_from(&args, file_cfg);
    let start = Instant::now();
    let mut clock = || start.elapsed().as_micros() as u64;
    let mut outcome = fit_map_timed(&observations, &spec, &cfg, &mut clock)?;
    outcome.map.metadata.source = format!(
        "dirprim fit seed={seed} input={}",
        args.input
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    );
    modelio::save_map(&outcome.map, &args.out)?;
    eprintln!(
        "fitted {} cells ({} uninformative) in {:.1} ms; model at {}",
        outcome.report.cells_fitted,
        outcome.report.cells_uninformative,
        start.elapsed().as_secs_f64() * 1e3,
        args.out.display()
    );
    write_json(
        &FitReportDto::new(seed, &outcome.report),
        args.report.as_deref(),
    )
}

fn cmd_eval(args: EvalArgs, file_cfg: &FileConfig, seed: u64) -> Result<(), AppError> {
    let map = modelio::load_map(&args.model)?;
    let mut observations = load_observations(&args.test)?;
    let e = file_cfg.eval.clone().unwrap_or_default();
    let split = args.split.or(e.split_fraction);
    if let Some(fraction) = split {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, test) = eval::split_test(&observations, fraction, &mut rng)
            .map_err(|err| AppError::Usage(err.to_string()))?;
        observations = test;
    }
    let kappa_obs = pick(args.kappa_obs, e.kappa_obs, 2.5);
    let floor = pick(args.floor_speed_density, e.floor_speed_density, 1e-3);

    let direction = eval::avg_density_direction(&map, &observations)
        .map_err(|err| AppError::Domain(err.to_string()))?;
    let speed = eval::avg_density_speed(&map, &observations, floor)
        .map_err(|err| AppError::Domain(err.to_string()))?;

    let improvement = if args.improvement {
        let cells = map.informative_cells();
        let cfg = ImprovementConfig {
            kappa_obs,
            ..Default::default()
        };
        let report = eval::likelihood_improvement(&map, &cells, &observations, &cfg, |c, m| {
            eval::predecessor_belief(m, c, kappa_obs)
        });
        Some(ImprovementDto::from(&report))
    } else {
        None
    };

    if let Some(path) = &args.cells_out {
        write_text(&per_cell_csv(&map, &observations, floor), Some(path))?;
    }

    let dto = EvalReportDto {
        seed,
        config: EvalConfigEcho {
            kappa_obs,
            floor_speed_density: floor,
            split_fraction: split,
        },
        test_size: observations.len(),
        direction: direction.into(),
        speed: speed.into(),
        improvement,
    };
    write_json(&dto, args.out.as_deref())
}

/// Per-cell breakdown of the density metrics, row-major cell order.
fn per_cell_csv(
    map: &dirprim_core::grid::PrimitiveMap,
    observations: &[MotionObservation],
    floor: f64,
) -> String {
    let spec = map.spec();
    let mut groups: Vec<Vec<MotionObservation>> = vec![Vec::new(); spec.n_cells()];
    for o in observations {
        if let Some(cell) = spec.locate(o.x, o.y) {
            groups[spec.linear(cell)].push(*o);
        }
    }
    let mut text =
        String::from("cell_ix,cell_iy,n_test,direction_mean,direction_std,speed_mean,speed_std\n");
    for cell in spec.cell_indices() {
        let group = &groups[spec.linear(cell)];
        if group.is_empty() {
            continue;
        }
        let direction = eval::avg_density_direction(map, group).expect("group is nonempty");
        let speed = eval::avg_density_speed(map, group, floor).expect("group is nonempty");
        text.push_str(&format!(
            "{},{},{},{:e},{:e},{:e},{:e}\n",
            cell.ix,
            cell.iy,
            group.len(),
            direction.mean,
            direction.std,
            speed.mean,
            speed.std
        ));
    }
    text
}

fn cmd_hallucinate(
    args: HallucinateArgs,
    file_cfg: &FileConfig,
    seed: u64,
) -> Result<(), AppError> {
    let map = modelio::load_map(&args.model)?;
    let i = file_cfg.infer.clone().unwrap_or_default();
    let dt = pick(args.dt, i.dt, 1.0);
    let use_speed = args.use_speed || i.use_speed.unwrap_or(false);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let result = infer::hallucinate(
        &map,
        Point {
            x: args.x,
            y: args.y,
        },
        args.n,
        dt,
        use_speed,
        &mut rng,
    )?;
    write_json(&HallucinationDto::new(seed, &result), args.out.as_deref())
}

fn cmd_fuse(args: FuseArgs, file_cfg: &FileConfig, seed: u64) -> Result<(), AppError> {
    let map = modelio::load_map(&args.model)?;
    let prior = match map.primitive_at(args.x, args.y) {
        Some(p) => p
            .mixture()
            .cloned()
            .unwrap_or_else(VonMisesMixture::uniform),
        None => {
            return Err(AppError::Domain(format!(
                "position ({}, {}) is outside the map",
                args.x, args.y
            )))
        }
    };
    let belief_mu = Angle::from_degrees(args.belief_mu);
    let belief = VonMisesMixture::single(
        VonMisesComponent::new(belief_mu, args.belief_kappa)
            .map_err(|e| AppError::Usage(e.to_string()))?,
    );
    let i = file_cfg.infer.clone().unwrap_or_default();
    let mut cfg = FuseConfig::default();
    if let Some(kappa) = args.proposal_kappa.or(i.proposal_kappa) {
        cfg.proposal_kappa = kappa;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fused = infer::fuse(&prior, &belief, args.n, &cfg, &mut rng)?;
    write_json(&FuseDto::new(seed, &fused), args.out.as_deref())
}

fn cmd_trajgen(args: TrajgenArgs, file_cfg: &FileConfig, seed: u64) -> Result<(), AppError> {
    let map = modelio::load_map(&args.model)?;
    let i = file_cfg.infer.clone().unwrap_or_default();
    let dt = pick(args.dt, i.dt, 1.0);
    let use_speed = args.use_speed || i.use_speed.unwrap_or(false);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trajectories = infer::generate_trajectories(
        &map,
        Point {
            x: args.x0,
            y: args.y0,
        },
        args.k,
        args.t,
        dt,
        use_speed,
        &mut rng,
    )?;
    match args.format {
        TrajFormat::Json => write_json(
            &TrajectoriesDto::new(seed, &trajectories),
            args.out.as_deref(),
        ),
        TrajFormat::Csv => {
            let mut text = String::from("trajectory,step,x,y,terminated\n");
            for (k, t) in trajectories.iter().enumerate() {
                for (step, p) in t.points.iter().enumerate() {
                    text.push_str(&format!(
                        "{k},{step},{},{},{}\n",
                        p.x,
                        p.y,
                        t.terminated.as_str()
                    ));
                }
            }
            write_text(&text, args.out.as_deref())
        }
    }
}

fn cmd_export_polar(args: ExportPolarArgs) -> Result<(), AppError> {
    let map = modelio::load_map(&args.model)?;
    if args.bins == 0 {
        return Err(AppError::Usage("--bins must be >= 1".to_string()));
    }
    let cells: Vec<CellIndex> = if args.all {
        map.spec().cell_indices().collect()
    } else {
        match args.cell.as_deref() {
            Some([ix, iy]) => {
                let cell = CellIndex { ix: *ix, iy: *iy };
                if cell.ix >= map.spec().nx || cell.iy >= map.spec().ny {
                    return Err(AppError::Domain(format!(
                        "cell {cell} outside the {}x{} grid",
                        map.spec().nx,
                        map.spec().ny
                    )));
                }
                vec![cell]
            }
            _ => {
                return Err(AppError::Usage(
                    "pass either --cell ix,iy or --all".to_string(),
                ))
            }
        }
    };
    let mut text = String::from("cell_ix,cell_iy,bin_center_deg,density\n");
    for cell in cells {
        let primitive = map.cell(cell);
        for b in 0..args.bins {
            let center_deg = (b as f64 + 0.5) * 360.0 / args.bins as f64;
            let density = primitive.direction_pdf(Angle::from_degrees(center_deg));
            text.push_str(&format!(
                "{},{},{center_deg},{density:e}\n",
                cell.ix, cell.iy
            ));
        }
    }
    write_text(&text, args.out.as_deref())
}
