//! Method-level fault localization from bug reports and revision history.
//!
//! The crate covers everything outside the neural model: corpus ingestion,
//! code revision graphs with SimRank similarity, multi-revision bug-fixing
//! features, and the evaluation harness.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod graph;
pub mod synthetic;

pub use error::{Error, Result};
