//! Scenario runner for the PVH simulator: ping sweeps, service benchmarks
//! and cluster dumps over topology files, with CSV output.

pub mod config;
pub mod experiment;

pub use config::{ExperimentKind, ExperimentSpec, Mode, ScenarioConfig};
pub use experiment::{
    ping_sweep, run, run_on, service_bench, Outcome, PingSweep, Row, Run, ServiceBench,
};

/// Directory holding the canned topology files.
pub fn scenarios_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}
