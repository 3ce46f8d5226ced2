//! SLA-constrained downlink traffic forecasting for cellular networks.

pub mod calibration;
pub mod data;
pub mod error;
pub mod eval;
pub mod features;
pub mod handover;
pub mod multistep;
pub mod nn;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
