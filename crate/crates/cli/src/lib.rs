//! Configuration files, run directories, checkpoints and diagnostics tables
//! for the `elastowave` solvers.

pub mod checkpoint;
pub mod config;
pub mod manifest;
pub mod run;
pub mod tables;

pub use config::RunFile;
pub use run::{Overrides, Suite};
