//! Manifest-driven simulate / reconstruct / compare workflows on top of
//! `fqpt-core`, with plain-text grid files on disk.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod dataset;
pub mod error;
pub mod gridfile;
pub mod manifest;

pub use commands::{compare, reconstruct, simulate, simulate_file, CompareReport, Method};
pub use error::{CliError, Result};
pub use gridfile::{GridData, GridFile};
pub use manifest::{paper_1d, paper_2d, preset, ExperimentManifest, PRESETS};

/// Cap the global thread pool from `FQPT_THREADS`, if set.
pub fn init_threads() -> Result<()> {
    let Ok(value) = std::env::var("FQPT_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::InvalidManifest(format!("FQPT_THREADS must be a positive integer, got {value:?}")))?;
    // a pool that already exists keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}
