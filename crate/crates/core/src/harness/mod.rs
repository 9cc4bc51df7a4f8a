//! Problem generation, file formats, and experiment orchestration.

pub mod experiment;
pub mod mtx;
pub mod problem;

pub use experiment::{
    run_and_write, run_experiment, solver_config, trial_draw_seed, trial_partitions, write_outputs, AlphaPreset,
    ExperimentOutcome, ExperimentSpec, MethodSpec, MetricsRow, Stopping, TrialResult, METRICS_HEADER, SUMMARY_HEADER,
};
pub use mtx::{read_matrix_market, read_vector, write_matrix_market, write_vector};
pub use problem::{gen_consistent_rhs, gen_gaussian_udv, gen_inconsistent_rhs, MatrixSource, ProblemSpec, RhsSource};
