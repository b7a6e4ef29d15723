//! Estimating pi with a fair coin.
//!
//! Toss until heads outnumber tails and record the fraction of heads; the
//! expected fraction is pi/4. This crate simulates that stopping rule two
//! ways, checks the closed forms behind it against exhaustive enumeration,
//! and runs the error-scaling experiments.

pub mod analytics;
pub mod cli;
pub mod error;
pub mod oracle;
pub mod stats;
pub mod walk_sim;

pub use error::{Error, Result};
