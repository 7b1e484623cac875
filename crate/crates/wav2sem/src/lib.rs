//! File formats, the checkpointing training driver, fixture generation and
//! the `wav2sem` command-line tool, on top of `wav2sem-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod pipeline;

pub use error::{Error, Result};
