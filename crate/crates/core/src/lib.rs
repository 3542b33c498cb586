//! Bit-by-bit probabilistic divide-and-conquer samplers.
//!
//! Integer and binary contingency tables with forced zeros, Latin squares
//! assembled from binary tables, and exact integer-partition samplers, plus
//! the exact counting oracles used to check them.

pub mod binary;
pub mod contingency;
pub mod count;
pub mod error;
mod flow;
pub mod io;
pub mod latin;
pub mod partition;
pub mod pmf;
pub mod sampling;
pub mod table;
pub mod uniformity;

pub use error::{Error, Result};
