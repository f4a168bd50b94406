//! Corpus JSONL: one record per line, tagged by `kind`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{BugReportRecord, CommitRecord, MethodRecord, SourceFile};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Record {
    File(SourceFile),
    Method(MethodRecord),
    Report(BugReportRecord),
    Commit(CommitRecord),
}

/// Reads records, skipping blank lines. Errors carry 1-based line numbers.
pub fn read_records<R: BufRead>(reader: R) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_records<W: Write>(mut writer: W, records: &[Record]) -> Result<()> {
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::InvalidCorpus(e.to_string()))?;
        writeln!(writer, "{line}")?;
    }
    Ok(())
}
