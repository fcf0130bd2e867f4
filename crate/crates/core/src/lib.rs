pub mod cli;
pub mod container;
pub mod corpus;
pub mod dsp;
pub mod error;
pub mod experiment;
pub mod features;
pub mod metrics;
pub mod midi;
pub mod nn;
pub mod pipeline;
pub mod svm;
pub mod synth;

pub use error::{Error, Result};
