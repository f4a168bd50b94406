//! Normalization of raw corpus records into delta form.

use std::collections::{BTreeMap, BTreeSet};

use super::diff::diff_methods;
use super::extract::{extract_methods, resolve_callees};
use super::jsonl::Record;
use super::link::link_fix_commits;
use super::tokenize::tokenize;
use super::{ChangeKind, CommitRecord, Corpus, MethodRecord};
use crate::error::{Error, Result};

/// Builds a normalized corpus from raw records.
///
/// Files carrying content are parsed with [`extract_methods`]; pre-extracted
/// method records pass through. Each commit's change set is recomputed from
/// consecutive revisions, fix commits are linked to reports, and report
/// ground truth is filled from the modifications and deletions of their fix
/// commits when absent.
pub fn normalize(records: Vec<Record>) -> Result<Corpus> {
    let raw = Corpus::from_records(records);
    let last = match raw.last_revision() {
        Some(r) => r,
        None => {
            let mut corpus = raw;
            finish_reports(&mut corpus)?;
            return Ok(corpus);
        }
    };

    let mut commits: BTreeMap<u32, CommitRecord> = BTreeMap::new();
    for c in raw.commits {
        if let Some(prev) = commits.insert(c.revision, c) {
            return Err(Error::InvalidCorpus(format!(
                "two commits produce revision {}",
                prev.revision
            )));
        }
    }

    let mut live: BTreeMap<String, MethodRecord> = BTreeMap::new();
    let mut out_methods = Vec::new();
    let mut out_files = Vec::new();
    for revision in 0..=last {
        let mut next = live.clone();
        if let Some(c) = commits.get(&revision) {
            for change in &c.changes {
                if change.kind == ChangeKind::Deletion {
                    next.remove(&change.method);
                }
            }
        }
        let mut parsed: Vec<MethodRecord> = Vec::new();
        for f in raw.files.iter().filter(|f| f.revision == revision) {
            if f.deleted || !f.content.is_empty() {
                next.retain(|_, m| m.file != f.path);
            }
            if !f.deleted && !f.content.is_empty() {
                parsed.extend(extract_methods(f)?);
            }
            let mut stripped = f.clone();
            stripped.content.clear();
            out_files.push(stripped);
        }
        if !parsed.is_empty() {
            // resolve calls against everything live at this revision
            let mut population: Vec<MethodRecord> = next.values().cloned().collect();
            let fresh: BTreeSet<String> = parsed.iter().map(|m| m.id.clone()).collect();
            population.retain(|m| !fresh.contains(&m.id));
            let offset = population.len();
            population.extend(parsed);
            resolve_callees(&mut population);
            for m in population.drain(offset..) {
                next.insert(m.id.clone(), m);
            }
        }
        for m in raw.methods.iter().filter(|m| m.revision == revision) {
            next.insert(m.id.clone(), m.clone());
        }

        let prev: Vec<MethodRecord> = live.values().cloned().collect();
        let mut current: Vec<MethodRecord> = next.into_values().collect();
        let changes = diff_methods(&prev, &current);
        let changed: BTreeMap<&str, ChangeKind> =
            changes.iter().map(|c| (c.method.as_str(), c.kind)).collect();
        for m in current.iter_mut() {
            match changed.get(m.id.as_str()) {
                Some(ChangeKind::Addition | ChangeKind::Modification) => {
                    m.revision = revision;
                    out_methods.push(m.clone());
                }
                _ => {
                    // unchanged: keep the version it was introduced with
                    if let Some(old) = live.get(&m.id) {
                        *m = old.clone();
                    }
                }
            }
        }
        if revision > 0 && !changes.is_empty() && !commits.contains_key(&revision) {
            return Err(Error::InvalidCorpus(format!(
                "revision {revision} changes code but no commit produces it"
            )));
        }
        if let Some(c) = commits.get_mut(&revision) {
            c.changes = changes;
        }
        live = current.into_iter().map(|m| (m.id.clone(), m)).collect();
    }

    let mut corpus = Corpus {
        files: out_files,
        methods: out_methods,
        reports: raw.reports,
        commits: commits.into_values().collect(),
    };
    finish_reports(&mut corpus)?;
    corpus.validate()?;
    Ok(corpus)
}

fn finish_reports(corpus: &mut Corpus) -> Result<()> {
    for r in corpus.reports.iter_mut() {
        if r.tokens.is_empty() {
            r.tokens = tokenize(&r.text);
        }
        if r.tokens.is_empty() {
            return Err(Error::InvalidCorpus(format!("report {} has no tokens", r.id)));
        }
    }
    let links = link_fix_commits(&corpus.commits, &corpus.reports);
    let mut linked: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for l in &links {
        linked.entry(l.report.as_str()).or_default().insert(l.commit.as_str());
    }
    for r in corpus.reports.iter_mut() {
        let mut fixed_by: BTreeSet<String> = r.fixed_by.iter().cloned().collect();
        if let Some(cs) = linked.get(r.id.as_str()) {
            fixed_by.extend(cs.iter().map(|c| c.to_string()));
        }
        r.fixed_by = fixed_by.into_iter().collect();
        if r.fixed_methods.is_empty() {
            for c in corpus.commits.iter().filter(|c| r.fixed_by.contains(&c.id)) {
                r.fixed_methods.extend(
                    c.changes
                        .iter()
                        .filter(|ch| ch.kind != ChangeKind::Addition)
                        .map(|ch| ch.method.clone()),
                );
            }
        }
    }
    corpus.reports.sort_by(|a, b| (a.created_at, &a.id).cmp(&(b.created_at, &b.id)));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{jsonl, BugReportRecord, SourceFile};

    fn file(path: &str, rev: u32, content: &str) -> Record {
        Record::File(SourceFile {
            path: path.into(),
            revision: rev,
            content: content.into(),
            deleted: false,
        })
    }

    fn commit(id: &str, rev: u32, ts: i64, msg: &str) -> Record {
        Record::Commit(CommitRecord {
            id: id.into(),
            revision: rev,
            timestamp: ts,
            message: msg.into(),
            parents: vec![],
            changes: vec![],
        })
    }

    fn toy() -> Vec<Record> {
        vec![
            file("F.java", 0, "class F { void a() { x(); } void b() { y(); } void c() { z(); } }"),
            file("F.java", 1, "class F { void a() { x(); } void c() { z(); w(); } void d() { a(); } }"),
            commit("c1", 1, 500, "Fix bug 7: c misbehaves"),
            Record::Report(BugReportRecord {
                id: "7".into(),
                created_at: 100,
                project: String::new(),
                text: "method c crashes when called twice".into(),
                tokens: vec![],
                fixed_methods: Default::default(),
                fixed_by: vec![],
            }),
        ]
    }

    #[test]
    fn normalizes_toy_history() {
        let corpus = normalize(toy()).unwrap();
        let summary = corpus.summary();
        assert_eq!(summary.reports, 1);
        assert_eq!(summary.commits, 1);
        assert_eq!(summary.revisions, 2);
        assert_eq!(summary.fix_links, 1);
        // a, b, c at revision 0; c' and d at revision 1
        assert_eq!(summary.methods, 5);
        let commit = &corpus.commits[0];
        let kinds: Vec<(&str, ChangeKind)> = commit
            .changes
            .iter()
            .map(|c| (c.method.as_str(), c.kind))
            .collect();
        assert_eq!(
            kinds,
            [
                ("F.java::F.b()", ChangeKind::Deletion),
                ("F.java::F.c()", ChangeKind::Modification),
                ("F.java::F.d()", ChangeKind::Addition),
            ]
        );
        let report = &corpus.reports[0];
        assert_eq!(report.fixed_by, ["c1"]);
        let truth: Vec<&str> = report.fixed_methods.iter().map(String::as_str).collect();
        assert_eq!(truth, ["F.java::F.b()", "F.java::F.c()"]);
        let d = corpus.methods.iter().find(|m| m.name == "d").unwrap();
        assert!(d.callees.contains("F.java::F.a()"));
        let snap1 = corpus.snapshot(1).unwrap();
        assert_eq!(snap1.methods.len(), 3);
    }

    #[test]
    fn normalization_is_a_fixed_point() {
        let once = normalize(toy()).unwrap();
        let twice = normalize(once.clone().into_records()).unwrap();
        assert_eq!(once, twice);
        let mut a = Vec::new();
        let mut b = Vec::new();
        jsonl::write_records(&mut a, &once.into_records()).unwrap();
        jsonl::write_records(&mut b, &twice.into_records()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn code_change_without_commit_is_rejected() {
        let mut records = toy();
        records.retain(|r| !matches!(r, Record::Commit(_)));
        assert!(matches!(normalize(records), Err(Error::InvalidCorpus(_))));
    }

    #[test]
    fn malformed_file_propagates() {
        let records = vec![file("Bad.java", 0, "class A {")];
        assert!(matches!(normalize(records), Err(Error::MalformedSource { .. })));
    }
}
