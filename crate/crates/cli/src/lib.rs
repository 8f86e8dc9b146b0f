//! Config-driven scenario runner for the correlation-function protocols.

pub mod config;
pub mod runner;
