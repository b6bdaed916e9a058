//! Command-line front end: data generation, training, evaluation, prediction
//! and field export for the two-stage model.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{
    cmd_eval, cmd_field, cmd_gen_data, cmd_predict, cmd_train, FieldGrid, GridSpec, Plane,
};
pub use config::RunConfig;
pub use error::CliError;

/// Environment variable holding the log filter, e.g. `RNERF_LOG=debug`.
pub const LOG_ENV: &str = "RNERF_LOG";
