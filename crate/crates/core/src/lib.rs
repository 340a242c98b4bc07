//! Rare-event digital option pricing with adaptive multilevel splitting and
//! Monte Carlo baselines.

pub mod ams;
pub mod baselines;
pub mod config;
pub mod contracts;
pub mod error;
pub mod experiment;
pub mod importance;
pub mod models;
pub mod presets;
pub mod report;
pub mod rng;
pub mod stats;

pub use ams::{run_ams, AmsConfig, AmsResult, KillCount, Termination};
pub use baselines::{run_antithetic_mc, run_crude_mc, run_mlmc, EstimateResult, McConfig, Method, MlmcConfig};
pub use contracts::{ContractKind, ContractSpec, Payoff};
pub use error::{Error, Result};
pub use experiment::{run_experiment, ExperimentSpec, MethodConfig, Replication};
pub use importance::{ImportanceFamily, ImportanceSpec};
pub use models::{ModelSpec, TimeGrid, Trajectory};
pub use report::{emit_report, ReportFormat, ReportRow};
