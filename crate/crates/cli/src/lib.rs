//! Scenario files, Monte-Carlo sweeps and plot-ready exports for `jrc-core`.

pub mod alloc_io;
pub mod config;
pub mod runner;
pub mod scenario;

pub use config::{ConfigError, ScenarioConfig, Waveform};
pub use runner::{export_af, run_point, run_scenario, RunOptions, RunReport};

/// Environment variable that overrides the output directory.
pub const OUT_DIR_ENV: &str = "JRCSIM_OUT_DIR";
