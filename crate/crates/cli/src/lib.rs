//! Directory-based evaluation harness: dataset scanning, npy/png/csv I/O,
//! streaming and exact evaluation drivers, and synthetic fixture
//! generation.

#![forbid(unsafe_code)]

pub mod dataset;
pub mod error;
pub mod npy;
pub mod pngio;
pub mod runner;
pub mod synth;

pub use dataset::{scan_dataset, DatasetEntry, ScanDepth};
pub use error::{HarnessError, Result};
pub use runner::{
    run_eval, CategoryFailure, EvalMode, ImageScoreMode, RangeSpec, RunConfig, RunOutcome,
};
pub use synth::{generate, SynthProfile, SynthSpec};
