//! Evaluation: chronological fold planning, ranking metrics, significance
//! testing and corpus diagnostics.

mod diagnostics;
mod folds;
mod metrics;
mod stats;

pub use diagnostics::{categorize_report, tfidf_gap, GapReport, Localization};
pub use folds::{plan_folds, FoldMode, FoldPlan, Task, FOLDS, TRAIN_FOLDS};
pub use metrics::{
    average_precision, mean_average_precision, mean_reciprocal_rank, top_at_k, truth_ranks, MetricReport,
};
pub use stats::{mann_whitney_u, SignificanceResult, EXACT_LIMIT};
