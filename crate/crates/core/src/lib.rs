//! Finite projective planes, blocking-set censuses and plane-curve densities.

pub mod bitset;
pub mod blocking;
pub mod cache;
pub mod curves;
pub mod density;
pub mod error;
pub mod field;
pub mod plane;
pub mod poly;
pub mod rat;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
