//! Graph-based two-sample tests for data with repeated observations.
//!
//! Observations are collapsed into distinct values, a similarity graph `C0`
//! is built on the distinct values, and edge-count statistics are summarized
//! over every observation-level graph `C0` induces, either by averaging or
//! by taking the union. All statistics and their permutation-null moments
//! have closed forms in the per-value counts, so tests scale with the number
//! of distinct values rather than the number of observations.

pub mod dataset;
pub mod error;
pub mod graph;
pub mod inference;
pub mod oracle;
pub mod simulate;

pub mod stats;
pub use error::{Error, Result};
