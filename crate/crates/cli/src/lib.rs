//! Command-line front end for the thymodyn engines: config loading, runs,
//! plot data and the engine benchmark.

pub mod bench;
pub mod config;
pub mod error;
pub mod plotdata;
pub mod run;

pub use bench::{cmd_bench, BenchTable};
pub use config::{
    parse_config, parse_config_str, AbsOverrides, ParamOverrides, ScenarioSpec, SdOverrides,
};
pub use error::CliError;
pub use plotdata::cmd_plotdata;
pub use run::{cmd_run, RunOutput};
