//! Experiment configuration, the replication engine, and result files.

pub mod config;
pub mod ratefit;
pub mod records;
pub mod run;
pub mod summary;

pub use config::{ExperimentConfig, ExperimentKind, GridPoint, PenaltyKind};
pub use ratefit::{rate_fit, RateFit};
pub use records::{read_records, write_records, ReplicationRecord, Timing, HEADER};
pub use run::{fit_records, median_series, run_experiment, run_replications, ExperimentOutput};
