//! Siting and sizing of shared energy-storage units on radial distribution
//! feeders.
//!
//! The crate is organised bottom-up:
//!
//! * [`feeder`]: network model and its text format,
//! * [`powerflow`]: backward/forward sweep solver, loss accounting and limit checks,
//! * [`profiles`]: hourly profiles, the daily battery dispatch and plan evaluation,
//! * [`encoding`]: the binary chromosome and its site-dispersing decoder,
//! * [`nsga2`]: the multi-objective evolutionary engine,
//! * [`planner`]: run configuration and the artifacts written by the CLI.

pub mod encoding;
pub mod feeder;
pub mod nsga2;
pub mod parallel;
pub mod planner;
pub mod powerflow;
pub mod profiles;
