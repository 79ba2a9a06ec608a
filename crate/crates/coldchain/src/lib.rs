//! Scenario files, runners and output formats for the `coldchain` command.

pub mod config;
pub mod output;
pub mod run;
pub mod scenario;
pub mod sweep;
