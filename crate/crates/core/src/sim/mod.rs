//! Experiment driver: seeding, channel loops and result files.

pub mod config;
pub mod engine;
pub mod experiments;
pub mod importance;

pub use engine::{awgn_channel, trial_rng, wilson, Engine, Proportion};
pub use importance::ShiftedNoise;
pub use config::{ExperimentKind, SimConfig};
pub use experiments::{run, simulate_cf, simulate_su_retry, CfCounts, Messages, SimPoint, SimResult};
