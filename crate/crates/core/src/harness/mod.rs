//! Experiment configuration, two-sample statistics, convergence experiments,
//! spectral diagnostics and result files.

mod checks;
mod config;
mod diagnostics;
mod experiment;
mod output;
mod stats;

pub use checks::run_checks;
pub use config::{
    ComparisonBlock, DiagnosticsBlock, ExperimentConfig, LimitBlock, OutputBlock, RunBlock, SamplerBlock, SumBlock,
    DEFAULT_BUDGET_SECONDS, MIN_DISTRIBUTIONAL_REPLICATES,
};
pub use diagnostics::{rectangle_battery, run_diagnostics, BumpRow, DiagnosticsReport, PhiRow};
pub use experiment::{
    run_convergence_experiment, run_convergence_experiment_with_samples, Check, ComparisonReport, ConvergenceRow,
    ExperimentSamples, ExperimentSetup, JointComparison, MomentRecord, SumSamples, SummaryRow,
};
pub use output::{prepare_dir, write_csv, write_table, Manifest};
pub use stats::{
    char_fn_distance, empirical_char_fn, ks_critical_value, ks_distance, mean, moment_table, sample_covariance,
    variance_with_se, MomentRow,
};
