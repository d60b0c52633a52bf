//! Optional JSON config file. Any value present acts as a default for the
//! matching command-line flag; explicit flags win.
//!
//! ```json
//! {
//!   "seed": 42,
//!   "synth": { "tracks": 500, "heading_kappa": 400.0 },
//!   "fit": { "cell_size": 5.0, "dbscan_eps_deg": 15.0 },
//!   "eval": { "kappa_obs": 2.5, "floor_speed_density": 0.001 },
//!   "infer": { "dt": 1.0, "use_speed": true }
//! }
//! ```

use std::fs;
use std::path::Path;

use serde::Deserialize;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub synth: Option<SynthSection>,
    pub fit: Option<FitSection>,
    pub eval: Option<EvalSection>,
    pub infer: Option<InferSection>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    pub tracks: Option<usize>,
    pub steps: Option<usize>,
    pub dt: Option<f64>,
    pub speed_mean: Option<f64>,
    pub speed_std: Option<f64>,
    pub heading_kappa: Option<f64>,
    pub width: Option<f64>,
    pub approach_steps: Option<usize>,
    pub branch_weights: Option<[f64; 3]>,
    pub radius: Option<f64>,
    pub radial_noise: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    pub cell_size: Option<f64>,
    pub dbscan_eps_deg: Option<f64>,
    pub dbscan_min_pts_floor: Option<usize>,
    pub dbscan_min_pts_frac: Option<f64>,
    pub em_tol: Option<f64>,
    pub em_max_iter: Option<usize>,
    pub speed_window: Option<f64>,
    pub min_cell_count: Option<usize>,
    pub min_speed_samples: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub kappa_obs: Option<f64>,
    pub floor_speed_density: Option<f64>,
    pub split_fraction: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferSection {
    pub dt: Option<f64>,
    pub use_speed: Option<bool>,
    pub proposal_kappa: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }
}

/// Flag > config file > built-in default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
