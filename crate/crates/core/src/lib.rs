pub mod config;
pub mod dataset;
pub mod error;
pub mod explain;
pub mod features;
pub mod gbm;
pub mod io;
pub mod pipeline;
pub mod screening;
pub mod signal;
pub mod synth;

pub use error::{Error, Result};
