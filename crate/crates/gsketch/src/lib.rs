//! Experiment drivers, file formats and command line support around
//! [`gsketch_core`].

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod tabulated;

pub use error::{Error, Result};
