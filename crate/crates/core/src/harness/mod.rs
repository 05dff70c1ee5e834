//! Experiments, sweeps, configuration and the toy demonstration.

pub mod config;
pub mod experiment;
pub mod sweep;
pub mod toy;

pub use config::{load_external_scores, prepare, Prepared, RunConfig};
pub use experiment::{run_experiment, Experiment, ResultRow, RunKey, TrialMetrics};
pub use sweep::{sweep, write_results_csv, BetaRule, Dataset, PolicyFamily, SweepPlan, SweepSpec};
pub use toy::{toy_demo, toy_sets, ToyRow};
