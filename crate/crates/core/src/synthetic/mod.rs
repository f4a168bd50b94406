//! Generated fixtures: random revision histories and planted-signal corpora.

mod corpus;
mod history;

pub use corpus::{generate_corpus, generate_records, SyntheticConfig};
pub use history::{random_history, HistoryShape};
