pub mod benchkit;
pub mod cli;
pub mod error;
pub mod evalkit;
pub mod generator;
pub mod regfit;
pub mod series;
pub mod smoothing;
pub mod synth;

pub use error::{Error, Result};
