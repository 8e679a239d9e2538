//! Two-choice fractional online bipartite matching with lossless online rounding.
//!
//! Offline nodes are known up front and online nodes arrive one at a time.
//! The fractional algorithms spread each arrival over at most two offline
//! neighbours; the rounding engines turn such a fractional run into a random
//! integral matching that matches every edge with exactly its fractional value.

pub mod error;
pub mod fractional;
pub mod instance;
pub mod probprogram;
pub mod randomness;
pub mod rounding;
pub mod verify;
pub mod rational;

pub use error::{Error, Result};

#[cfg(test)]
mod pipeline_tests;
