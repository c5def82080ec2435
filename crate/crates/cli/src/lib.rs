//! Command-line front end for the simulator: TOML scenario files, CSV
//! results and SVG plots.

pub mod config;
pub mod figures;
pub mod output;
pub mod plot;
pub mod results;

pub use iemisim_core as core;

pub use config::{load_experiment, parse_config, ConfigError, ConfigFile, ConfigIssue, Experiment};
pub use figures::{load_figure, FIGURES};
pub use output::{run_series, write_outputs, Format, Mode, OutputSpec, Quantity, Series, Vary};
pub use results::{format_number, read_results, write_results, write_results_file, ResultRow, HEADER};
