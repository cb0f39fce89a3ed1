//! Input/output formats and the command-line pipeline around `symgl-core`.
//!
//! Matrices travel as CSV, tables as TSV, models as JSON and symmetry
//! graphs as DOT. Every output is a deterministic function of the inputs,
//! the configuration and the seed.

pub mod cli;
pub mod error;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod roi;
pub mod tables;

pub use error::{CliError, CliResult};
pub use model::{intersect_models, symmetry_dot, ModelJson};
pub use pipeline::{run_pipeline, RunConfig};
pub use roi::RoiMap;
