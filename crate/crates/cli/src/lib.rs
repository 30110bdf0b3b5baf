//! Batch front end for thin-plate-spline smoothing: reads point or panel
//! CSVs, runs the samplers and writes draws, summaries, diagnostics and
//! surface grids as CSV plus a JSON manifest.

pub mod config;
pub mod error;
pub mod ingest;
pub mod output;
pub mod run;

pub use config::{GridSpec, Model, RunConfig, Transform};
pub use error::{CliError, Result};
pub use ingest::{ingest_panel, ingest_points, Jitter, PanelData, PointData};
pub use run::{make_synthetic, replay, run, run_binomial, run_gaussian, Manifest, SynthKind};
