//! Batch front end: run configuration, binary field files, CSV tables and
//! the `modes`, `optimize`, `analyze`, `propagate` and `sweep-gen` commands.

pub mod commands;
pub mod config;
pub mod files;
pub mod table;

pub use commands::{cmd_analyze, cmd_modes, cmd_optimize, cmd_optimize_sweep, cmd_propagate, cmd_sweep_gen, exit_code, Outcome};
pub use config::RunConfig;
pub use files::FieldFile;
pub use table::Table;
