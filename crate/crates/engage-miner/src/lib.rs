//! File formats, synthetic cohorts, reports and the command-line
//! pipeline around `engage-miner-core`.

pub mod cli;
mod error;
pub mod io;
pub mod pipeline;
pub mod report;
pub mod synth;

pub use error::{Error, Result};
