pub mod error;
pub mod linop;
pub mod models;
pub mod dirac;
pub mod analysis;
pub mod metrics;
pub mod report;
pub mod cli;

pub use error::{Error, Result};
