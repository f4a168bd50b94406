//! Random revision sequences for graph property tests.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{BugReportRecord, CommitRecord, CorpusSnapshot, FixLink, MethodRecord, SourceFile};

#[derive(Debug, Clone, Copy)]
pub struct HistoryShape {
    pub revisions: usize,
    pub files: usize,
    pub methods_per_file: usize,
}

impl Default for HistoryShape {
    fn default() -> Self {
        Self {
            revisions: 6,
            files: 3,
            methods_per_file: 4,
        }
    }
}

/// Consecutive snapshots starting at revision 0 with random additions,
/// deletions, edits, calls, file removals, commits and fix links. Revision
/// 0 has no commit; every later revision has exactly one.
pub fn random_history(seed: u64, shape: HistoryShape) -> (Vec<CorpusSnapshot>, Vec<FixLink>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool: Vec<(String, String)> = (0..shape.files)
        .flat_map(|f| {
            (0..shape.methods_per_file).map(move |m| {
                let path = format!("pkg/F{f}.java");
                (format!("{path}::F{f}.m{m}()"), path)
            })
        })
        .collect();
    // current body version per pool entry; None when absent
    let mut state: Vec<Option<u32>> = pool.iter().map(|_| rng.gen_bool(0.6).then_some(0)).collect();
    let mut calls: Vec<BTreeSet<String>> = vec![BTreeSet::new(); pool.len()];
    let mut snapshots = Vec::with_capacity(shape.revisions);
    let mut links = Vec::new();
    let mut report_no = 0;

    for rev in 0..shape.revisions as u32 {
        if rev > 0 {
            for i in 0..pool.len() {
                let roll: f64 = rng.gen();
                match state[i] {
                    None if roll < 0.25 => {
                        state[i] = Some(rev);
                        calls[i] = random_callees(&mut rng, &pool, i);
                    }
                    Some(_) if roll < 0.15 => state[i] = None,
                    Some(_) if roll < 0.45 => {
                        state[i] = Some(rev);
                        calls[i] = random_callees(&mut rng, &pool, i);
                    }
                    _ => {}
                }
            }
        } else {
            for i in 0..pool.len() {
                calls[i] = random_callees(&mut rng, &pool, i);
            }
        }
        let mut snap = CorpusSnapshot::empty(rev);
        let mut paths = BTreeSet::new();
        for (i, (id, path)) in pool.iter().enumerate() {
            let Some(body) = state[i] else { continue };
            paths.insert(path.clone());
            snap.methods.push(MethodRecord {
                id: id.clone(),
                file: path.clone(),
                revision: body,
                name: id.rsplit('.').next().unwrap_or(id).trim_end_matches("()").to_string(),
                tokens: vec![format!("body{body}"), format!("m{i}")],
                api_calls: Vec::new(),
                comment: Vec::new(),
                callees: calls[i].clone(),
                statement_count: 1 + body,
            });
        }
        // occasionally an empty file lingers
        if rng.gen_bool(0.2) {
            paths.insert("pkg/Empty.java".to_string());
        }
        snap.files = paths
            .into_iter()
            .map(|path| SourceFile {
                path,
                revision: rev,
                content: String::new(),
                deleted: false,
            })
            .collect();
        if rev > 0 {
            let commit = format!("c{rev}");
            snap.commits.push(CommitRecord {
                id: commit.clone(),
                revision: rev,
                timestamp: i64::from(rev) * 1000,
                message: String::new(),
                parents: Vec::new(),
                changes: Vec::new(),
            });
            for _ in 0..rng.gen_range(0..3) {
                report_no += 1;
                let report = format!("r{report_no}");
                snap.reports.push(BugReportRecord {
                    id: report.clone(),
                    created_at: i64::from(rev) * 1000 - 500,
                    project: String::new(),
                    text: String::new(),
                    tokens: Vec::new(),
                    fixed_methods: BTreeSet::new(),
                    fixed_by: vec![commit.clone()],
                });
                let link = FixLink {
                    report,
                    commit: commit.clone(),
                };
                snap.fixes.push(link.clone());
                links.push(link);
            }
        }
        snapshots.push(snap);
    }
    (snapshots, links)
}

fn random_callees(rng: &mut ChaCha8Rng, pool: &[(String, String)], me: usize) -> BTreeSet<String> {
    let n = rng.gen_range(0..3);
    let mut out = BTreeSet::new();
    for _ in 0..n {
        let (id, _) = pool.choose(rng).expect("non-empty pool");
        if id != &pool[me].0 {
            out.insert(id.clone());
        }
    }
    out
}
