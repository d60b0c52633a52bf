//! Location-dependent multimodal priors over motion direction and speed.
//!
//! The environment is discretized into a grid of cells. Each cell carries a
//! *directional primitive*: a mixture of von Mises distributions over heading
//! angles, with a gamma speed distribution attached to each directional mode.
//! Primitives are learned from trajectory data and can then be used to
//! project observed vehicles forward, to fuse the learned prior with a live
//! belief distribution by rejection sampling, and to roll out multimodal
//! trajectories cell by cell.
//!
//! The crate is `no_std`-compatible (with `alloc`); disable the default
//! `std` feature for embedded use. File formats, CSV ingestion, and the
//! command-line interface live in the companion `dirprim` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

#[cfg(feature = "std")]
extern crate std;

mod float;

pub mod angle;
pub mod bessel;
pub mod cluster;
pub mod eval;
pub mod fit;
pub mod grid;
pub mod infer;
pub mod motion;
pub mod special;
pub mod speed;
pub mod synth;
pub mod vonmises;

pub use angle::{circular_stats, Angle, CircularStats};
pub use grid::{CellIndex, DirectionalPrimitive, GridSpec, MapMetadata, PrimitiveMap};
pub use motion::{MotionObservation, Point, RawTrajectory};
pub use speed::GammaParams;
pub use vonmises::{VonMisesComponent, VonMisesMixture, KAPPA_MAX};
