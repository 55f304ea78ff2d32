//! File formats, command implementations and the batch experiment harness
//! around [`declip_core`].

pub mod commands;
pub mod csv_out;
mod error;
pub mod experiment;
pub mod wav;

pub use error::{Error, Result};
