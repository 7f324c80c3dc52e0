//! File formats, run configuration and the `hipgnn` command-line tool built
//! on `hipgnn-core`.

pub mod checkpoint;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod run;

pub use error::{LabError, Result};
