//! Configuration, orchestration and file output for swarm-lob experiments.
//!
//! Layout under the output directory:
//!
//! ```text
//! runs/<model>/run.json
//! runs/<model>/rep-NNN/{ticks.csv, manifest.json}
//! runs/<model>/analysis/*.csv, analysis.json
//! runs/<model>/fit/*.csv, fit.json
//! compare/*.csv, comparison.json
//! summary.{json,csv}
//! ```

pub mod checks;
pub mod commands;
pub mod config;
pub mod io;
pub mod pipeline;
