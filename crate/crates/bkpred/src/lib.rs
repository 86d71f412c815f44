//! Bankruptcy prediction from annual reports: file formats, training and
//! evaluation drivers, the LLM collection client and the `bkpred` CLI.

pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod io;
pub mod manifest;
pub mod pipeline;
pub mod report;
pub mod synth;
pub mod train;
pub mod transport;

pub use error::{Error, Result};
