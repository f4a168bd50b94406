//! Bug-fixing features of candidate methods for a new report: revised
//! collaborative filtering score (rcfs), fixing frequency (bffs) and fixing
//! recency (bfrs), all computed strictly from history that predates the
//! report.

mod history;
mod rcfs;
mod tfidf;

use std::io::Write;

pub use history::{simrank_over, HistoryContext, HistoryIndex, HistoryReport, MONTH};
pub use rcfs::{rcfs, rcfs_from_cosines, rcfs_scores};
pub use tfidf::{TermVector, TfIdf};

use crate::corpus::{BugReportRecord, CorpusSnapshot};
use crate::error::Result;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FixingFeatures {
    pub rcfs: f64,
    pub bffs: f64,
    pub bfrs: f64,
}

/// Features of every method of `snapshot` for `report`, aligned with
/// `snapshot.methods`.
pub fn report_features(
    index: &HistoryIndex,
    report: &BugReportRecord,
    snapshot: &CorpusSnapshot,
) -> Result<Vec<FixingFeatures>> {
    let ctx = index.context_for(report)?.with_revision(snapshot);
    let methods: Vec<&str> = snapshot.methods.iter().map(|m| m.id.as_str()).collect();
    let scores = rcfs_scores(&report.tokens, &methods, &ctx)?;
    Ok(methods
        .iter()
        .zip(scores)
        .map(|(m, rcfs)| FixingFeatures {
            rcfs,
            bffs: ctx.bffs(m),
            bfrs: ctx.bfrs(m),
        })
        .collect())
}

pub const DUMP_HEADER: &str = "report\tmethod\trcfs\tbffs\tbfrs";

/// Writes one tab-separated row per (report, method).
pub fn write_feature_rows<'a, W: Write>(
    mut w: W,
    rows: impl IntoIterator<Item = (&'a str, &'a str, FixingFeatures)>,
) -> Result<()> {
    for (report, method, f) in rows {
        writeln!(w, "{report}\t{method}\t{:.9}\t{:.9}\t{:.9}", f.rcfs, f.bffs, f.bfrs)?;
    }
    Ok(())
}
