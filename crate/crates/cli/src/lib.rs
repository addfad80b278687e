//! Experiment driver for the `rectsum` library: test-function generation,
//! convergence, maximal-ratio and identity suites, and versioned reports.

pub mod config;
pub mod report;
pub mod runs;
pub mod suites;
pub mod testfn;
