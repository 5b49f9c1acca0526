//! Permuted compressive sensing of 2-D signals.
//!
//! A signal is permuted so its significant entries spread evenly across
//! columns, each column is measured with a shared Gaussian matrix, and the
//! columns are recovered independently by l1 minimisation.

pub mod codec;
pub mod error;
pub mod layermodel;
pub mod permute;
pub mod recon;
pub mod rng;
pub mod sensing;
pub mod signal;

pub use error::{Error, Result};
