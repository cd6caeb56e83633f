//! Experiment harness and command line around `rangelp-core`: Monte Carlo
//! ensembles on a worker pool, the stats and price CSV formats, run
//! manifests, and SVG plots.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod ingest;
pub mod manifest;
pub mod montecarlo;
pub mod svg;

pub use ingest::{calibrate, join, load_paired_csv, Calibration, EstimateMode, IngestError, Joined, PriceSeries};
pub use manifest::RunManifest;
pub use montecarlo::{export_stats, import_stats, pathwise_compare, read_stats, run_experiment, write_stats, RunError};
