//! Scenario files, the run driver, statistics and reference solutions.

pub mod analytic;
pub mod config;
pub mod output;
pub mod run;
pub mod stats;

pub use analytic::analytic_transient_profile;
pub use config::{parse_config, parse_config_str, ClusterSpec, ProfileSpec, Scenario, ScenarioKind};
pub use output::{ThermoRow, THERMO_HEADER};
pub use run::{drive, fit_double_channel, initial_state, prepare, reseed, run, RunOptions, RunReport};
pub use stats::{
    chain_clusters, contact_count, estimate_viscosity, mean_sem, velocity_profile, ProfileAccumulator, ProfileObserver,
    ProfileSample, ViscosityFit,
};
