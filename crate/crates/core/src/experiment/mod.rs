//! Data ingestion, synthetic generators and the experiment runner.

pub mod io;
pub mod runner;
pub mod synth;

pub use io::{load_csv, write_csv};
pub use runner::{
    build_report, run_experiment, trial_seed, uniform_baseline, ExperimentConfig, ExperimentOutput, MethodResult,
    Report, TrialResult, BASELINE, SCHEMA_VERSION,
};
pub use synth::{generate_synthetic, SyntheticSpec};
