//! Experiment configs, runners, CSV/JSON/SVG output and the acceptance suite
//! behind the `coupling-lab` command.

pub mod config;
pub mod output;
pub mod plot;
pub mod presets;
pub mod runner;
pub mod verify;
