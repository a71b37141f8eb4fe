pub mod cli;
pub mod degree;
pub mod designer;
pub mod error;
pub mod geometry;
pub mod meanfield;
pub mod montecarlo;
pub mod reconfig;

pub use error::{Error, Result};
