//! Experiment runner for [`eep_core`]: single runs, convergence sweeps and
//! built-in presets, with CSV output and JSON summaries.

pub mod config;
pub mod error;
pub mod preset;
pub mod run;
pub mod sweep;

pub use config::{RunConfig, SweepConfig};
pub use error::{CliError, Result};
pub use preset::{run_preset, JobOutput, Preset};
pub use run::{run, run_to_writer, RunSummary};
pub use sweep::{run_sweep, sweep, SweepRow, SweepTable};
