//! Experiment runner around `missmass-core`: loads one TOML config,
//! dispatches to the matching pipeline, checks the kind's invariant, and
//! renders the result as a table, csv, or json record.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod render;
