//! File formats, ingestion, and the command-line interface for directional
//! primitive maps. The math and fitting live in `dirprim-core`.

pub mod cli;
pub mod config;
pub mod csvio;
pub mod modelio;
pub mod report;
