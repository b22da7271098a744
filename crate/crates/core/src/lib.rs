//! Community detection by degree-corrected stochastic block partitioning.

pub mod bench;
pub mod blockmodel;
pub mod comm;
pub mod dcsbp;
pub mod edist;
pub mod error;
pub mod generator;
pub mod graph;
pub mod inference;
pub mod metrics;
pub mod rng;
pub mod wire;

pub use error::{CommError, Error, Result};
