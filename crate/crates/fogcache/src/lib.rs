//! Configuration, sweep orchestration, result files and figure presets on
//! top of `fogcache-core`.

pub mod config;
mod error;
pub mod format;
pub mod harness;
pub mod persist;
pub mod presets;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use harness::{run_experiment, ResultRow, ResultTable};
pub use presets::{reproduce_figure, FigureTag, Scale};
