//! The `dirprim/1` model file: a JSON document holding the grid spec and
//! every cell's mixture and speed parameters.
//!
//! Angles are stored in radians, speeds in m/s. An uninformative cell has
//! `weights`, `mus`, `kappas`, and `speed` all null. Loading revalidates
//! every invariant through the core constructors and names the offending
//! cell on failure. Serialization uses shortest-round-trip decimal, so
//! save → load reproduces parameters bit-identically.

use std::fmt;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use dirprim_core::angle::Angle;
use dirprim_core::grid::{DirectionalPrimitive, GridSpec, MapMetadata, PrimitiveMap};
use dirprim_core::speed::GammaParams;
use dirprim_core::vonmises::{VonMisesComponent, VonMisesMixture};

pub const FORMAT_VERSION: &str = "dirprim/1";

#[derive(Debug)]
pub enum ModelIoError {
    Io(io::Error),
    Json(serde_json::Error),
    /// Unsupported format version.
    Version {
        found: String,
    },
    Spec {
        message: String,
    },
    /// Invalid cell payload, with its linear index.
    Cell {
        index: usize,
        message: String,
    },
}

impl fmt::Display for ModelIoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Io(e) => write!(f, "{e}"),
            Self::Json(e) => write!(f, "invalid model JSON: {e}"),
            Self::Version { found } => {
                write!(
                    f,
                    "unsupported model version '{found}' (expected '{FORMAT_VERSION}')"
                )
            }
            Self::Spec { message } => write!(f, "invalid grid spec: {message}"),
            Self::Cell { index, message } => write!(f, "cell {index}: {message}"),
        }
    }
}

impl std::error::Error for ModelIoError {}

impl From<io::Error> for ModelIoError {
    fn from(e: io::Error) -> Self {
        ModelIoError::Io(e)
    }
}

impl From<serde_json::Error> for ModelIoError {
    fn from(e: serde_json::Error) -> Self {
        ModelIoError::Json(e)
    }
}

#[derive(Serialize, Deserialize)]
struct MapFile {
    version: String,
    spec: SpecDto,
    metadata: MetadataDto,
    cells: Vec<CellDto>,
}

#[derive(Serialize, Deserialize)]
struct SpecDto {
    origin_x: f64,
    origin_y: f64,
    cell_size: f64,
    nx: usize,
    ny: usize,
}

#[derive(Serialize, Deserialize, Default)]
struct MetadataDto {
    config_digest: u64,
    source: String,
}

#[derive(Serialize, Deserialize)]
struct CellDto {
    support_count: usize,
    weights: Option<Vec<f64>>,
    mus: Option<Vec<f64>>,
    kappas: Option<Vec<f64>>,
    speed: Option<Vec<Option<GammaDto>>>,
}

#[derive(Serialize, Deserialize)]
struct GammaDto {
    alpha: f64,
    beta: f64,
}

pub fn save_map(map: &PrimitiveMap, path: &Path) -> Result<(), ModelIoError> {
    let file = MapFile {
        version: FORMAT_VERSION.to_string(),
        spec: SpecDto {
            origin_x: map.spec().origin_x,
            origin_y: map.spec().origin_y,
            cell_size: map.spec().cell_size,
            nx: map.spec().nx,
            ny: map.spec().ny,
        },
        metadata: MetadataDto {
            config_digest: map.metadata.config_digest,
            source: map.metadata.source.clone(),
        },
        cells: map.cells().iter().map(cell_to_dto).collect(),
    };
    let mut out = io::BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut out, &file)?;
    use io::Write;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn cell_to_dto(cell: &DirectionalPrimitive) -> CellDto {
    match cell.mixture() {
        Some(mixture) => CellDto {
            support_count: cell.support_count(),
            weights: Some(mixture.weights().to_vec()),
            mus: Some(
                mixture
                    .components()
                    .iter()
                    .map(|c| c.mu().radians())
                    .collect(),
            ),
            kappas: Some(mixture.components().iter().map(|c| c.kappa()).collect()),
            speed: Some(
                cell.speed_modes()
                    .iter()
                    .map(|g| {
                        g.map(|g| GammaDto {
                            alpha: g.alpha(),
                            beta: g.beta(),
                        })
                    })
                    .collect(),
            ),
        },
        None => CellDto {
            support_count: cell.support_count(),
            weights: None,
            mus: None,
            kappas: None,
            speed: None,
        },
    }
}

pub fn load_map(path: &Path) -> Result<PrimitiveMap, ModelIoError> {
    let text = fs::read_to_string(path)?;
    load_map_str(&text)
}

pub fn load_map_str(text: &str) -> Result<PrimitiveMap, ModelIoError> {
    let file: MapFile = serde_json::from_str(text)?;
    if file.version != FORMAT_VERSION {
        return Err(ModelIoError::Version {
            found: file.version,
        });
    }
    let spec = GridSpec::new(
        file.spec.origin_x,
        file.spec.origin_y,
        file.spec.cell_size,
        file.spec.nx,
        file.spec.ny,
    )
    .map_err(|e| ModelIoError::Spec {
        message: e.to_string(),
    })?;
    if file.cells.len() != spec.n_cells() {
        return Err(ModelIoError::Spec {
            message: format!(
                "expected {} cells, found {}",
                spec.n_cells(),
                file.cells.len()
            ),
        });
    }
    let mut cells = Vec::with_capacity(file.cells.len());
    for (index, dto) in file.cells.into_iter().enumerate() {
        cells.push(cell_from_dto(dto, index)?);
    }
    let metadata = MapMetadata {
        config_digest: file.metadata.config_digest,
        source: file.metadata.source,
    };
    PrimitiveMap::new(spec, cells, metadata).map_err(|e| ModelIoError::Spec {
        message: e.to_string(),
    })
}

fn cell_from_dto(dto: CellDto, index: usize) -> Result<DirectionalPrimitive, ModelIoError> {
    let cell_err = |message: String| ModelIoError::Cell { index, message };
    match (dto.weights, dto.mus, dto.kappas, dto.speed) {
        (None, None, None, None) => Ok(DirectionalPrimitive::uninformative(dto.support_count)),
        (Some(weights), Some(mus), Some(kappas), Some(speed)) => {
            if mus.len() != weights.len() || kappas.len() != weights.len() {
                return Err(cell_err(format!(
                    "mismatched lengths: {} weights, {} mus, {} kappas",
                    weights.len(),
                    mus.len(),
                    kappas.len()
                )));
            }
            let mut components = Vec::with_capacity(mus.len());
            for (mu, kappa) in mus.into_iter().zip(kappas) {
                if !mu.is_finite() {
                    return Err(cell_err(format!("non-finite mean direction {mu}")));
                }
                components.push(
                    VonMisesComponent::new(Angle::new(mu), kappa)
                        .map_err(|e| cell_err(e.to_string()))?,
                );
            }
            let mixture =
                VonMisesMixture::new(components, weights).map_err(|e| cell_err(e.to_string()))?;
            let speed_modes: Vec<Option<GammaParams>> = speed
                .into_iter()
                .map(|g| {
                    g.map(|g| {
                        GammaParams::new(g.alpha, g.beta).map_err(|e| cell_err(e.to_string()))
                    })
                    .transpose()
                })
                .collect::<Result<_, _>>()?;
            DirectionalPrimitive::fitted(mixture, speed_modes, dto.support_count)
                .map_err(|e| cell_err(e.to_string()))
        }
        _ => Err(cell_err(
            "cell must have weights/mus/kappas/speed either all present or all null".to_string(),
        )),
    }
}
