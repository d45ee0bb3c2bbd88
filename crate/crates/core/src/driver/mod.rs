//! Command-line orchestration: configuration, sample splits, the staged
//! pipeline and report writing.

pub mod config;
pub mod pipeline;
pub mod report;
pub mod subsample;

pub use config::{RunConfig, CACHE_DIR_ENV};
pub use pipeline::{analyze, detect, load_inputs, report_from_panel, run_pipeline, Detection, Inputs, RunSummary};
pub use report::{OutputDir, PlotRow, RunManifest, SubsampleStatus};
pub use subsample::{median_split_cli, split_subsample, CliSide, MedianBasis, SubsampleRule};
