//! Knowledge-graph embedding with entity-aware negative sampling.

pub mod analysis;
pub mod config;
pub mod dataset;
pub mod eans_index;
pub mod error;
pub mod evaluator;
pub mod objective;
pub mod params;
pub mod rng;
pub mod sampling;
pub mod scoring;
pub mod synthetic;
pub mod trainer;

pub use error::{Error, Result};
