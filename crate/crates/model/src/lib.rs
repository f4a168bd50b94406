//! Multi-view recurrent attention model for locating faulty methods from
//! bug reports: method and report encoders with view attention, expansion
//! of short methods from related ones, fusion with bug-fixing features,
//! training over sampled instances, ranking and fold evaluation.

pub mod config;
pub mod data;
pub mod error;
pub mod model;
pub mod network;
pub mod pipeline;
pub mod vocab;

#[cfg(test)]
mod testutil;

pub use config::{Ablation, ModelConfig};
pub use data::{Candidate, Dataset, MethodVersion, ReportData};
pub use error::{Error, Result};
pub use model::{sort_predictions, EncodingCache, Instance, Mram, Prediction, TrainOutcome};
pub use pipeline::{evaluate, EvalOptions, EvalResult, TaskResult};
pub use vocab::{Vocabulary, UNK};
