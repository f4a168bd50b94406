//! Normalized corpus records and revision snapshots.
//!
//! A corpus is stored in delta form: a method record appears at the revision
//! where that version of the method was introduced, and deletions are carried
//! by the `changes` of the commit that produced the revision. Snapshots are
//! materialized on demand by replaying revisions in order.

pub mod diff;
pub mod extract;
pub mod ingest;
pub mod jsonl;
pub mod link;
pub mod tokenize;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use diff::diff_revisions;
pub use extract::{extract_methods, resolve_callees};
pub use link::link_fix_commits;
pub use tokenize::tokenize;

/// Seconds since the Unix epoch, UTC.
pub type Timestamp = i64;

pub const SECONDS_PER_DAY: Timestamp = 86_400;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFile {
    pub path: String,
    pub revision: u32,
    #[serde(default)]
    pub content: String,
    /// Raw input only: the file no longer exists from this revision on.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub deleted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodRecord {
    /// `path::Type.name(paramTypes)`; stable across revisions.
    pub id: String,
    pub file: String,
    /// Revision at which this version of the method was introduced.
    pub revision: u32,
    pub name: String,
    pub tokens: Vec<String>,
    #[serde(default)]
    pub api_calls: Vec<String>,
    #[serde(default)]
    pub comment: Vec<String>,
    #[serde(default)]
    pub callees: BTreeSet<String>,
    #[serde(default)]
    pub statement_count: u32,
}

impl MethodRecord {
    /// Two versions are the same method body when all three views agree.
    pub fn same_content(&self, other: &MethodRecord) -> bool {
        self.tokens == other.tokens
            && self.api_calls == other.api_calls
            && self.comment == other.comment
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugReportRecord {
    pub id: String,
    pub created_at: Timestamp,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub project: String,
    /// Raw summary and description; tokenized at ingest when `tokens` is empty.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub text: String,
    #[serde(default)]
    pub tokens: Vec<String>,
    #[serde(default)]
    pub fixed_methods: BTreeSet<String>,
    /// Commits linked to this report as its fix.
    #[serde(default)]
    pub fixed_by: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChangeKind {
    Addition,
    Deletion,
    Modification,
}

impl ChangeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ChangeKind::Addition => "addition",
            ChangeKind::Deletion => "deletion",
            ChangeKind::Modification => "modification",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MethodChange {
    pub method: String,
    pub kind: ChangeKind,
}

impl MethodChange {
    pub fn new(method: impl Into<String>, kind: ChangeKind) -> Self {
        Self {
            method: method.into(),
            kind,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub id: String,
    /// The revision this commit produces.
    pub revision: u32,
    pub timestamp: Timestamp,
    #[serde(default)]
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parents: Vec<String>,
    #[serde(default)]
    pub changes: Vec<MethodChange>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FixLink {
    pub report: String,
    pub commit: String,
}

/// Full state of the code base at one revision plus the history records
/// attached to that revision.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusSnapshot {
    pub revision: u32,
    pub files: Vec<SourceFile>,
    pub methods: Vec<MethodRecord>,
    /// Reports fixed by a commit of this revision.
    pub reports: Vec<BugReportRecord>,
    /// Commits producing this revision (at most one in a linear history).
    pub commits: Vec<CommitRecord>,
    pub fixes: Vec<FixLink>,
}

impl CorpusSnapshot {
    pub fn empty(revision: u32) -> Self {
        Self {
            revision,
            ..Self::default()
        }
    }

    pub fn method(&self, id: &str) -> Option<&MethodRecord> {
        self.methods.iter().find(|m| m.id == id)
    }

    pub fn method_index(&self) -> HashMap<&str, &MethodRecord> {
        self.methods.iter().map(|m| (m.id.as_str(), m)).collect()
    }
}

/// The normalized, validated corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub files: Vec<SourceFile>,
    pub methods: Vec<MethodRecord>,
    pub reports: Vec<BugReportRecord>,
    pub commits: Vec<CommitRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CorpusSummary {
    pub files: usize,
    pub methods: usize,
    pub reports: usize,
    pub commits: usize,
    pub revisions: usize,
    pub fix_links: usize,
}

impl Corpus {
    pub fn from_records(records: Vec<jsonl::Record>) -> Self {
        let mut corpus = Corpus::default();
        for record in records {
            match record {
                jsonl::Record::File(f) => corpus.files.push(f),
                jsonl::Record::Method(m) => corpus.methods.push(m),
                jsonl::Record::Report(r) => corpus.reports.push(r),
                jsonl::Record::Commit(c) => corpus.commits.push(c),
            }
        }
        corpus
    }

    pub fn into_records(self) -> Vec<jsonl::Record> {
        let mut out = Vec::new();
        out.extend(self.files.into_iter().map(jsonl::Record::File));
        out.extend(self.methods.into_iter().map(jsonl::Record::Method));
        out.extend(self.reports.into_iter().map(jsonl::Record::Report));
        out.extend(self.commits.into_iter().map(jsonl::Record::Commit));
        out
    }

    /// Highest revision mentioned by any code or commit record.
    pub fn last_revision(&self) -> Option<u32> {
        let files = self.files.iter().map(|f| f.revision);
        let methods = self.methods.iter().map(|m| m.revision);
        let commits = self.commits.iter().map(|c| c.revision);
        files.chain(methods).chain(commits).max()
    }

    pub fn report(&self, id: &str) -> Option<&BugReportRecord> {
        self.reports.iter().find(|r| r.id == id)
    }

    pub fn commit(&self, id: &str) -> Option<&CommitRecord> {
        self.commits.iter().find(|c| c.id == id)
    }

    pub fn fix_links(&self) -> Vec<FixLink> {
        let mut links: Vec<FixLink> = self
            .reports
            .iter()
            .flat_map(|r| {
                r.fixed_by.iter().map(move |c| FixLink {
                    report: r.id.clone(),
                    commit: c.clone(),
                })
            })
            .collect();
        links.sort();
        links.dedup();
        links
    }

    /// The commit that fixes `report`: the earliest linked commit.
    pub fn fix_commit(&self, report: &BugReportRecord) -> Option<&CommitRecord> {
        report
            .fixed_by
            .iter()
            .filter_map(|id| self.commit(id))
            .min_by_key(|c| (c.revision, c.timestamp))
    }

    /// Revision immediately preceding the report's fix commit.
    pub fn before_fix_revision(&self, report: &BugReportRecord) -> Option<u32> {
        self.fix_commit(report)
            .and_then(|c| c.revision.checked_sub(1))
    }

    pub fn summary(&self) -> CorpusSummary {
        CorpusSummary {
            files: self.files.len(),
            methods: self.methods.len(),
            reports: self.reports.len(),
            commits: self.commits.len(),
            revisions: self.last_revision().map_or(0, |r| r as usize + 1),
            fix_links: self.fix_links().len(),
        }
    }

    /// Checks the cross-record invariants of a normalized corpus.
    pub fn validate(&self) -> Result<()> {
        let mut report_ids = BTreeSet::new();
        for r in &self.reports {
            if !report_ids.insert(r.id.as_str()) {
                return Err(Error::InvalidCorpus(format!("duplicate report id {}", r.id)));
            }
        }
        let mut commit_ids = BTreeSet::new();
        let mut by_revision: BTreeMap<u32, &CommitRecord> = BTreeMap::new();
        for c in &self.commits {
            if !commit_ids.insert(c.id.as_str()) {
                return Err(Error::InvalidCorpus(format!("duplicate commit id {}", c.id)));
            }
            if c.parents.len() > 1 {
                return Err(Error::InvalidCorpus(format!(
                    "commit {} is a merge; only linear histories are supported",
                    c.id
                )));
            }
            if let Some(prev) = by_revision.insert(c.revision, c) {
                return Err(Error::InvalidCorpus(format!(
                    "commits {} and {} both produce revision {}",
                    prev.id, c.id, c.revision
                )));
            }
        }
        let mut last_ts = Timestamp::MIN;
        for c in by_revision.values() {
            if c.timestamp < last_ts {
                return Err(Error::InvalidCorpus(format!(
                    "commit {} at revision {} is older than its predecessor",
                    c.id, c.revision
                )));
            }
            last_ts = c.timestamp;
        }
        let mut versions = BTreeSet::new();
        for m in &self.methods {
            if !versions.insert((m.id.as_str(), m.revision)) {
                return Err(Error::InvalidCorpus(format!(
                    "method {} recorded twice at revision {}",
                    m.id, m.revision
                )));
            }
        }
        for r in &self.reports {
            for c in &r.fixed_by {
                if !commit_ids.contains(c.as_str()) {
                    return Err(Error::UnresolvedReference(format!(
                        "report {} is linked to unknown commit {c}",
                        r.id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Materializes every revision `0..=last_revision` in order.
    pub fn snapshots(&self) -> Snapshots<'_> {
        Snapshots::new(self)
    }

    pub fn snapshot(&self, revision: u32) -> Option<CorpusSnapshot> {
        self.snapshots().find(|s| s.revision == revision)
    }
}

/// Iterator replaying a delta-form corpus revision by revision.
pub struct Snapshots<'a> {
    next: u32,
    last: Option<u32>,
    live_methods: BTreeMap<String, MethodRecord>,
    live_files: BTreeMap<String, SourceFile>,
    methods_by_rev: BTreeMap<u32, Vec<&'a MethodRecord>>,
    files_by_rev: BTreeMap<u32, Vec<&'a SourceFile>>,
    commits_by_rev: BTreeMap<u32, Vec<&'a CommitRecord>>,
    reports_by_commit: HashMap<&'a str, Vec<&'a BugReportRecord>>,
}

impl<'a> Snapshots<'a> {
    fn new(corpus: &'a Corpus) -> Self {
        let mut methods_by_rev: BTreeMap<u32, Vec<&MethodRecord>> = BTreeMap::new();
        for m in &corpus.methods {
            methods_by_rev.entry(m.revision).or_default().push(m);
        }
        let mut files_by_rev: BTreeMap<u32, Vec<&SourceFile>> = BTreeMap::new();
        for f in &corpus.files {
            files_by_rev.entry(f.revision).or_default().push(f);
        }
        let mut commits_by_rev: BTreeMap<u32, Vec<&CommitRecord>> = BTreeMap::new();
        for c in &corpus.commits {
            commits_by_rev.entry(c.revision).or_default().push(c);
        }
        let mut reports_by_commit: HashMap<&str, Vec<&BugReportRecord>> = HashMap::new();
        for r in &corpus.reports {
            for c in &r.fixed_by {
                reports_by_commit.entry(c.as_str()).or_default().push(r);
            }
        }
        Self {
            next: 0,
            last: corpus.last_revision(),
            live_methods: BTreeMap::new(),
            live_files: BTreeMap::new(),
            methods_by_rev,
            files_by_rev,
            commits_by_rev,
            reports_by_commit,
        }
    }
}

impl Iterator for Snapshots<'_> {
    type Item = CorpusSnapshot;

    fn next(&mut self) -> Option<CorpusSnapshot> {
        let last = self.last?;
        if self.next > last {
            return None;
        }
        let revision = self.next;
        self.next += 1;

        let commits: Vec<CommitRecord> = self
            .commits_by_rev
            .get(&revision)
            .map(|cs| cs.iter().map(|c| (*c).clone()).collect())
            .unwrap_or_default();
        for c in &commits {
            for change in &c.changes {
                if change.kind == ChangeKind::Deletion {
                    self.live_methods.remove(&change.method);
                }
            }
        }
        if let Some(files) = self.files_by_rev.get(&revision) {
            for f in files {
                if f.deleted {
                    self.live_files.remove(&f.path);
                } else {
                    self.live_files.insert(f.path.clone(), (*f).clone());
                }
            }
        }
        if let Some(methods) = self.methods_by_rev.get(&revision) {
            for m in methods {
                self.live_methods.insert(m.id.clone(), (*m).clone());
            }
        }

        let mut reports = Vec::new();
        let mut fixes = Vec::new();
        for c in &commits {
            if let Some(rs) = self.reports_by_commit.get(c.id.as_str()) {
                for r in rs {
                    fixes.push(FixLink {
                        report: r.id.clone(),
                        commit: c.id.clone(),
                    });
                    if !reports.iter().any(|x: &BugReportRecord| x.id == r.id) {
                        reports.push((*r).clone());
                    }
                }
            }
        }
        fixes.sort();
        reports.sort_by(|a, b| a.id.cmp(&b.id));

        Some(CorpusSnapshot {
            revision,
            files: self.live_files.values().cloned().collect(),
            methods: self.live_methods.values().cloned().collect(),
            reports,
            commits,
            fixes,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn method(id: &str, rev: u32, body: &[&str]) -> MethodRecord {
        MethodRecord {
            id: id.into(),
            file: "F.java".into(),
            revision: rev,
            name: id.into(),
            tokens: body.iter().map(|s| s.to_string()).collect(),
            api_calls: vec![],
            comment: vec![],
            callees: BTreeSet::new(),
            statement_count: 1,
        }
    }

    #[test]
    fn snapshots_replay_deltas() {
        let corpus = Corpus {
            methods: vec![
                method("a", 0, &["one"]),
                method("b", 0, &["two"]),
                method("b", 1, &["two", "more"]),
            ],
            commits: vec![CommitRecord {
                id: "c1".into(),
                revision: 1,
                timestamp: 10,
                message: String::new(),
                parents: vec![],
                changes: vec![
                    MethodChange::new("a", ChangeKind::Deletion),
                    MethodChange::new("b", ChangeKind::Modification),
                ],
            }],
            ..Corpus::default()
        };
        let snaps: Vec<_> = corpus.snapshots().collect();
        assert_eq!(snaps.len(), 2);
        assert_eq!(snaps[0].methods.len(), 2);
        assert_eq!(snaps[1].methods.len(), 1);
        assert_eq!(snaps[1].methods[0].tokens, vec!["two", "more"]);
        assert_eq!(snaps[1].commits.len(), 1);
    }

    #[test]
    fn validate_rejects_merges_and_duplicates() {
        let commit = |id: &str, rev: u32, parents: Vec<String>| CommitRecord {
            id: id.into(),
            revision: rev,
            timestamp: rev as i64,
            message: String::new(),
            parents,
            changes: vec![],
        };
        let mut corpus = Corpus {
            commits: vec![commit("c1", 1, vec!["a".into(), "b".into()])],
            ..Corpus::default()
        };
        assert!(matches!(corpus.validate(), Err(Error::InvalidCorpus(_))));
        corpus.commits = vec![commit("c1", 1, vec![]), commit("c2", 1, vec![])];
        assert!(corpus.validate().is_err());
        corpus.commits = vec![commit("c1", 1, vec![])];
        assert!(corpus.validate().is_ok());
    }
}
