//! Experiment configuration, execution, comparison and file output.

pub mod compare;
pub mod config;
pub mod io;
pub mod predictive;
pub mod run;
pub mod sensitivity;

pub use compare::{compare, reference_posterior, CompareReport, CompareRow};
pub use config::{ExperimentConfig, LgssmSpec, LinearGaussianSpec, ModelSpec};
pub use predictive::{posterior_predictive, quantile_type7, Predictive, PredictiveBand};
pub use run::{run_experiment, write_outputs, ExperimentOutput, FilterReport, FilterRun};
pub use sensitivity::{analyze, load_bounds, BoundsFile, SloppinessOutput, SloppinessSummary};
