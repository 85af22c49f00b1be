//! Command-line front end of `hyperholonomy`: surface specs, batch runs over
//! sample points and reproducible JSON reports.

pub mod args;
pub mod config;
pub mod error;
pub mod expr;
pub mod json;
pub mod run;
pub mod schema;
pub mod specfile;
pub mod text;

pub use args::{invoke, load_config, Invocation};
pub use config::RunConfig;
pub use error::CliError;
pub use run::{run, RunOutcome};
