//! Functional mission profiles from multivariate device usage telemetry.

pub mod basis;
pub mod cli;
pub mod depth;
pub mod error;
pub mod exchange;
pub mod fdcore;
pub mod profile;
pub mod simgen;
pub mod smoothing;
pub mod stats;

pub use error::{Error, Result};
