//! Experiment orchestration: scenario grids, Monte-Carlo replication,
//! metrics, file fitting and CSV export.

pub mod config;
pub mod export;
pub mod fit_file;
pub mod metrics;
pub mod scenario;
pub mod seeds;
