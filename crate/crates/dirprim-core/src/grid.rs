//! The uniform grid of cells and the fitted primitive map.
//!
//! Cells are half-open squares: a point on a shared edge belongs to the
//! higher-index cell. Cells with too little data, or where mode discovery
//! found no cluster, are *uninformative*: their direction density is the
//! uniform `1/(2π)` and they carry no speed models.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::TAU;
use core::fmt;

use crate::angle::Angle;
use crate::motion::MotionObservation;
use crate::speed::GammaParams;
use crate::vonmises::VonMisesMixture;

#[allow(unused_imports)]
use crate::float::*;

/// Cells with fewer training observations are left uninformative.
pub const MIN_CELL_COUNT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridError {
    InvalidCellSize {
        cell_size: f64,
    },
    EmptyGrid,
    /// `cells` array length must equal `nx · ny`.
    CellCountMismatch {
        expected: usize,
        got: usize,
    },
    /// Speed model list length must match the mixture's component count.
    SpeedModeMismatch {
        modes: usize,
        speeds: usize,
    },
}

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidCellSize { cell_size } => {
                write!(f, "cell_size must be finite and > 0, got {cell_size}")
            }
            Self::EmptyGrid => write!(f, "grid needs nx >= 1 and ny >= 1"),
            Self::CellCountMismatch { expected, got } => {
                write!(f, "expected {expected} cells, got {got}")
            }
            Self::SpeedModeMismatch { modes, speeds } => {
                write!(f, "{modes} mixture modes but {speeds} speed entries")
            }
        }
    }
}

impl core::error::Error for GridError {}

/// Geometry of a uniform square grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub origin_x: f64,
    pub origin_y: f64,
    pub cell_size: f64,
    pub nx: usize,
    pub ny: usize,
}

/// A cell address `(ix, iy)`; `ix` grows with x, `iy` with y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellIndex {
    pub ix: usize,
    pub iy: usize,
}

impl fmt::Display for CellIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.ix, self.iy)
    }
}

impl GridSpec {
    pub fn new(
        origin_x: f64,
        origin_y: f64,
        cell_size: f64,
        nx: usize,
        ny: usize,
    ) -> Result<Self, GridError> {
        if !cell_size.is_finite() || cell_size <= 0.0 {
            return Err(GridError::InvalidCellSize { cell_size });
        }
        if nx == 0 || ny == 0 {
            return Err(GridError::EmptyGrid);
        }
        Ok(GridSpec {
            origin_x,
            origin_y,
            cell_size,
            nx,
            ny,
        })
    }

    /// Smallest grid of `cell_size` cells whose origin is an integer multiple
    /// of `cell_size` and which covers the given bounds.
    pub fn covering(
        min_x: f64,
        max_x: f64,
        min_y: f64,
        max_y: f64,
        cell_size: f64,
    ) -> Result<Self, GridError> {
        if !cell_size.is_finite() || cell_size <= 0.0 {
            return Err(GridError::InvalidCellSize { cell_size });
        }
        let origin_x = (min_x / cell_size).floor() * cell_size;
        let origin_y = (min_y / cell_size).floor() * cell_size;
        let nx = (((max_x - origin_x) / cell_size).floor() as usize) + 1;
        let ny = (((max_y - origin_y) / cell_size).floor() as usize) + 1;
        GridSpec::new(origin_x, origin_y, cell_size, nx.max(1), ny.max(1))
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Cell containing `(x, y)`, or `None` outside the grid. Half-open
    /// cells: a boundary point belongs to the higher-index cell.
    pub fn locate(&self, x: f64, y: f64) -> Option<CellIndex> {
        let fx = ((x - self.origin_x) / self.cell_size).floor();
        let fy = ((y - self.origin_y) / self.cell_size).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.nx as f64 || fy >= self.ny as f64 {
            return None;
        }
        Some(CellIndex {
            ix: fx as usize,
            iy: fy as usize,
        })
    }

    /// Row-major linear index.
    pub fn linear(&self, cell: CellIndex) -> usize {
        cell.iy * self.nx + cell.ix
    }

    pub fn cell_center(&self, cell: CellIndex) -> (f64, f64) {
        (
            self.origin_x + (cell.ix as f64 + 0.5) * self.cell_size,
            self.origin_y + (cell.iy as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn cell_indices(&self) -> impl Iterator<Item = CellIndex> + '_ {
        let nx = self.nx;
        (0..self.n_cells()).map(move |i| CellIndex {
            ix: i % nx,
            iy: i / nx,
        })
    }
}

/// Observations partitioned by cell (indices into the input slice).
#[derive(Debug, Clone)]
pub struct BinnedObservations {
    pub per_cell: Vec<Vec<usize>>,
    /// Count of observations that fell outside the grid and were dropped.
    pub outside: usize,
}

pub fn bin_observations(spec: &GridSpec, observations: &[MotionObservation]) -> BinnedObservations {
    let mut per_cell = alloc::vec![Vec::new(); spec.n_cells()];
    let mut outside = 0;
    for (i, obs) in observations.iter().enumerate() {
        match spec.locate(obs.x, obs.y) {
            Some(cell) => per_cell[spec.linear(cell)].push(i),
            None => outside += 1,
        }
    }
    BinnedObservations { per_cell, outside }
}

/// One cell's prior: a direction mixture with per-mode speed models, or the
/// uninformative marker.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalPrimitive {
    mixture: Option<VonMisesMixture>,
    speed_modes: Vec<Option<GammaParams>>,
    support_count: usize,
}

impl DirectionalPrimitive {
    /// A cell without enough data for a fit; uniform direction density and
    /// no speed models.
    pub fn uninformative(support_count: usize) -> Self {
        DirectionalPrimitive {
            mixture: None,
            speed_modes: Vec::new(),
            support_count,
        }
    }

    pub fn fitted(
        mixture: VonMisesMixture,
        speed_modes: Vec<Option<GammaParams>>,
        support_count: usize,
    ) -> Result<Self, GridError> {
        if mixture.len() != speed_modes.len() {
            return Err(GridError::SpeedModeMismatch {
                modes: mixture.len(),
                speeds: speed_modes.len(),
            });
        }
        Ok(DirectionalPrimitive {
            mixture: Some(mixture),
            speed_modes,
            support_count,
        })
    }

    pub fn is_informative(&self) -> bool {
        self.mixture.is_some()
    }

    pub fn mixture(&self) -> Option<&VonMisesMixture> {
        self.mixture.as_ref()
    }

    pub fn speed_modes(&self) -> &[Option<GammaParams>] {
        &self.speed_modes
    }

    pub fn support_count(&self) -> usize {
        self.support_count
    }

    /// Direction density at `theta`; `1/(2π)` for uninformative cells.
    pub fn direction_pdf(&self, theta: Angle) -> f64 {
        match &self.mixture {
            Some(m) => m.pdf(theta),
            None => 1.0 / TAU,
        }
    }

    pub fn direction_log_pdf(&self, theta: Angle) -> f64 {
        match &self.mixture {
            Some(m) => m.log_pdf(theta),
            None => -(TAU.ln()),
        }
    }
}

/// Free-form provenance carried with a fitted map.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MapMetadata {
    /// FNV-1a digest of the fit configuration.
    pub config_digest: u64,
    /// Producer description (command line, seed, ...). No timestamps, so
    /// reruns stay byte-identical.
    pub source: String,
}

/// The fitted artifact: grid geometry plus one primitive per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveMap {
    spec: GridSpec,
    cells: Vec<DirectionalPrimitive>,
    pub metadata: MapMetadata,
}

impl PrimitiveMap {
    pub fn new(
        spec: GridSpec,
        cells: Vec<DirectionalPrimitive>,
        metadata: MapMetadata,
    ) -> Result<Self, GridError> {
        if cells.len() != spec.n_cells() {
            return Err(GridError::CellCountMismatch {
                expected: spec.n_cells(),
                got: cells.len(),
            });
        }
        Ok(PrimitiveMap {
            spec,
            cells,
            metadata,
        })
    }

    /// An all-uninformative map over the given grid (the κ ≈ 0 baseline).
    pub fn uniform(spec: GridSpec) -> Self {
        let cells = alloc::vec![DirectionalPrimitive::uninformative(0); spec.n_cells()];
        PrimitiveMap {
            spec,
            cells,
            metadata: MapMetadata::default(),
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn cell(&self, index: CellIndex) -> &DirectionalPrimitive {
        &self.cells[self.spec.linear(index)]
    }

    pub fn cells(&self) -> &[DirectionalPrimitive] {
        &self.cells
    }

    /// Primitive of the cell containing `(x, y)`, if inside the grid.
    pub fn primitive_at(&self, x: f64, y: f64) -> Option<&DirectionalPrimitive> {
        self.spec.locate(x, y).map(|c| self.cell(c))
    }

    /// Indices of all informative cells, row-major order.
    pub fn informative_cells(&self) -> Vec<CellIndex> {
        self.spec
            .cell_indices()
            .filter(|&c| self.cell(c).is_informative())
            .collect()
    }
}
