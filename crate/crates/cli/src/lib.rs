//! Scenario-driven sweeps over the `rsma-core` rate models: loading and
//! validating scenario files, evaluating grids, and writing CSV tables and
//! SVG plots.

mod error;
pub mod plot;
pub mod scenario;
pub mod sweep;
pub mod table;

pub use error::{CliError, Result};
pub use plot::{render_svg, write_svg};
pub use scenario::{load_scenario, parse_scenario, Scenario};
pub use sweep::{evaluate_point, run_sweep, RunOptions, SweepResult, SweepRow};
pub use table::{read_csv, write_csv};
