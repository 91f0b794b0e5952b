//! Config-driven experiments and their reports.

mod config;
mod run;

pub use config::{
    parse_config, parse_config_with_overrides, parse_lattice_list, parse_real, Checks, ConfigError,
    ExperimentConfig, ExperimentKind, Perturbation, PerturbationShape, PhaseRange, RawConfig,
};
pub use run::{
    run_experiment, CheckResult, ExperimentError, ExperimentReport, RateRow, CHECKS_CSV_HEADER,
    DISPERSION_CSV_HEADER, GROWTH_CSV_HEADER, MONOTONE_TOLERANCE, RATE_FLOOR, STRUCTURE_TOLERANCE,
};
