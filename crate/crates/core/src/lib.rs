//! Locality analysis of destination-address reference traces and
//! trace-driven simulation of MIN, LRU, FIFO and RAND replacement.
//!
//! Every analysis consumes the destination reference string of a
//! [`Trace`](trace::Trace), i.e. the ordered `dst` fields of its frames.

pub mod cachesim;
pub mod cli;
pub mod error;
pub mod locality;
pub mod output;
pub mod searchcost;
pub mod synth;
pub mod trace;

pub use error::{Error, Result};
