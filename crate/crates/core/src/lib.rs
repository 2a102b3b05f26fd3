pub mod control_lab;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod spectral;
pub mod regularizer;
pub mod waveop;

pub use error::{Error, Result};
