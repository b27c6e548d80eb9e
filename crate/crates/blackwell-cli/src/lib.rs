//! Scenario-driven command line for the approachability library: parse a
//! TOML experiment description, run it deterministically, and write step
//! CSVs, report JSON, and sweep quantile tables.

pub mod commands;
pub mod scenario;
