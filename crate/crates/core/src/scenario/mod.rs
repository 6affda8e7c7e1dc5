//! Configuration, canned experiments, parameter sweeps and file output.

pub mod config;
pub mod output;
pub mod runner;

pub use config::{RunConfig, ScenarioName, SweepConfig, SweepQuantity};
pub use output::{OutputSet, RunManifest, Table, MANIFEST_NAME};
pub use runner::{run_scenario, run_sweep};
