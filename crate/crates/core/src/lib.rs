//! Adaptive online testing engine.
//!
//! The crate couples best-arm identification (confidence-bound exploration
//! policies) with always-valid hypothesis testing against a control arm:
//!
//! - [`instance`]: arm definitions, sufficient statistics and sample logs.
//! - [`concentration`]: Hoeffding and random-walk (finite LIL) confidence radii.
//! - [`policies`]: uniform, action elimination, UCB and LUCB decision rules.
//! - [`inference`]: CB-inversion p-values, running-minimum anytime p-values
//!   and α-investing.
//! - [`engine`]: the sequential experiment loop.
//! - [`difficulty`]: gap complexity terms for an instance.
//! - [`harness`]: seeded Monte Carlo replication, aggregation and result files.
//! - [`cli`]: the `adaptest` command line.

pub mod cli;
pub mod concentration;
pub mod config;
pub mod difficulty;
pub mod engine;
mod error;
pub mod harness;
pub mod inference;
pub mod instance;
pub mod policies;

pub use error::{ConfigIssue, Error, Result};
