//! Command-line frontend for the pose-embedding pipeline: configuration,
//! on-disk formats, threaded execution, and the per-command drivers.

pub mod commands;
pub mod config;
pub mod formats;
pub mod runner;
