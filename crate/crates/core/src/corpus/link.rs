//! Heuristic linking of fix commits to bug reports.
//!
//! A commit fixes a report when its message references the report's number
//! (`#421`, `bug 421`, `fixes 421`, or the full prefixed id such as
//! `HTTP-421`) and the commit is not older than the report.

use std::collections::{BTreeSet, HashMap};
use std::sync::OnceLock;

use regex::Regex;

use super::{BugReportRecord, CommitRecord, FixLink};

fn id_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    PATTERN.get_or_init(|| {
        Regex::new(r"(?i)(?:#|\bbugs?\b[\s:#-]*|\bfix(?:es|ed)?\b[\s:#-]*)(\d+)\b")
            .expect("static regex")
    })
}

fn numeric_part(id: &str) -> Option<u64> {
    let start = id.rfind(|c: char| !c.is_ascii_digit()).map_or(0, |i| i + 1);
    id[start..].parse().ok()
}

/// Returns `(report id, commit id)` pairs, sorted and unique.
pub fn link_fix_commits(commits: &[CommitRecord], reports: &[BugReportRecord]) -> Vec<FixLink> {
    let mut by_number: HashMap<u64, Vec<&BugReportRecord>> = HashMap::new();
    for r in reports {
        if let Some(n) = numeric_part(&r.id) {
            by_number.entry(n).or_default().push(r);
        }
    }
    let mut links = BTreeSet::new();
    for c in commits {
        let mut candidates: Vec<&BugReportRecord> = Vec::new();
        for caps in id_pattern().captures_iter(&c.message) {
            if let Ok(n) = caps[1].parse::<u64>() {
                if let Some(rs) = by_number.get(&n) {
                    candidates.extend(rs.iter().copied());
                }
            }
        }
        let message = c.message.to_lowercase();
        for r in reports {
            let prefixed = r.id.chars().any(|ch| !ch.is_ascii_digit());
            if prefixed && contains_word(&message, &r.id.to_lowercase()) {
                candidates.push(r);
            }
        }
        for r in candidates {
            if c.timestamp >= r.created_at {
                links.insert(FixLink {
                    report: r.id.clone(),
                    commit: c.id.clone(),
                });
            }
        }
    }
    links.into_iter().collect()
}

fn contains_word(haystack: &str, needle: &str) -> bool {
    if needle.is_empty() {
        return false;
    }
    haystack.match_indices(needle).any(|(i, _)| {
        let before = haystack[..i].chars().next_back();
        let after = haystack[i + needle.len()..].chars().next();
        !before.is_some_and(|c| c.is_alphanumeric()) && !after.is_some_and(|c| c.is_alphanumeric())
    })
}
