//! Experiment orchestration behind the `periodic-df` binary: configuration,
//! the `bands`, `fit`, `bench` and `reproduce` drivers, and CSV/JSON output.

pub mod config;
pub mod reproduce;
pub mod run;
pub mod selftest;

pub use config::{ExperimentConfig, Overrides, PotentialConfig};
pub use reproduce::{cmd_reproduce, preset, Manifest, Preset, Reproduction};
pub use run::{
    bench_on, cmd_bands, cmd_bench, cmd_fit, fit_orbitals, run_bands, run_bench, run_fit,
    solve_orbitals, timed_fit, write_bench_csv, write_fit_artifacts, BenchRecord, FitOutcome,
    Sweep, BENCH_HEADER,
};
pub use selftest::{run_selftest, CheckOutcome};
