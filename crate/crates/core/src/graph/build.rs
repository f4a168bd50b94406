//! Batch construction of a revision graph from a full snapshot sequence.
//!
//! This walks each entity's timeline independently instead of replaying
//! revisions, so it doubles as a cross-check of incremental merging.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{EdgeKind, Node, NodeId, NodeKind, RevisionGraph};
use crate::corpus::{BugReportRecord, CorpusSnapshot, FixLink, MethodRecord};
use crate::error::{Error, Result};

/// One version of an entity: the node and the revisions it spans.
struct Version {
    node: NodeId,
    start: u32,
    end: Option<u32>,
}

fn version_at(versions: &[Version], revision: u32) -> Option<&Version> {
    versions
        .iter()
        .find(|v| v.start <= revision && v.end.is_none_or(|e| revision < e))
}

/// Builds the graph for `snapshots` (consecutive revisions, ascending).
pub fn build_graph(snapshots: &[CorpusSnapshot], fix_links: &[FixLink]) -> Result<RevisionGraph> {
    let mut graph = RevisionGraph::new();
    let Some(first) = snapshots.first() else {
        if let Some(link) = fix_links.first() {
            return Err(Error::UnresolvedReference(format!(
                "fix link {} -> {}",
                link.commit, link.report
            )));
        }
        return Ok(graph);
    };
    for (k, s) in snapshots.iter().enumerate() {
        let expected = first.revision + k as u32;
        if s.revision != expected {
            return Err(Error::RevisionOrder {
                expected,
                found: s.revision,
            });
        }
    }
    let revisions: Vec<u32> = snapshots.iter().map(|s| s.revision).collect();

    let mut commit_revision: HashMap<&str, u32> = HashMap::new();
    for s in snapshots {
        for c in &s.commits {
            commit_revision.insert(c.id.as_str(), s.revision);
        }
    }
    let reports: HashMap<&str, &BugReportRecord> = snapshots
        .iter()
        .flat_map(|s| s.reports.iter())
        .map(|r| (r.id.as_str(), r))
        .collect();
    for link in fix_links {
        if !commit_revision.contains_key(link.commit.as_str())
            || !reports.contains_key(link.report.as_str())
        {
            return Err(Error::UnresolvedReference(format!(
                "fix link {} -> {}",
                link.commit, link.report
            )));
        }
    }

    let repository = graph.repository();

    // method timelines
    let mut timelines: BTreeMap<&str, BTreeMap<u32, &MethodRecord>> = BTreeMap::new();
    for s in snapshots {
        for m in &s.methods {
            timelines.entry(m.id.as_str()).or_default().insert(s.revision, m);
        }
    }
    let mut method_versions: HashMap<&str, Vec<Version>> = HashMap::new();
    let mut records: HashMap<NodeId, &MethodRecord> = HashMap::new();
    // nodes touched per revision, for modify edges
    let mut touched: BTreeMap<u32, Vec<NodeId>> = BTreeMap::new();
    for (&id, timeline) in &timelines {
        let mut versions: Vec<Version> = Vec::new();
        let mut previous: Option<&MethodRecord> = None;
        for &rev in &revisions {
            match (previous, timeline.get(&rev)) {
                (None, Some(&record)) => {
                    let node = graph.add_node(Node::code(NodeKind::Method, id, rev));
                    if let Some(last) = versions.last() {
                        graph.add_edge(EdgeKind::Update, last.node, node, None);
                    }
                    touched.entry(rev).or_default().push(node);
                    records.insert(node, record);
                    versions.push(Version {
                        node,
                        start: rev,
                        end: None,
                    });
                    previous = Some(record);
                }
                (Some(old), Some(&record)) if !old.same_content(record) => {
                    let last = versions.last_mut().expect("open version");
                    last.end = Some(rev);
                    let prev_node = last.node;
                    graph.nodes[prev_node.0].deleted_at = Some(rev);
                    let node = graph.add_node(Node::code(NodeKind::Method, id, rev));
                    graph.add_edge(EdgeKind::Update, prev_node, node, None);
                    touched.entry(rev).or_default().push(node);
                    records.insert(node, record);
                    versions.push(Version {
                        node,
                        start: rev,
                        end: None,
                    });
                    previous = Some(record);
                }
                (Some(_), None) => {
                    let last = versions.last_mut().expect("open version");
                    last.end = Some(rev);
                    graph.nodes[last.node.0].deleted_at = Some(rev);
                    touched.entry(rev).or_default().push(last.node);
                    previous = None;
                }
                _ => {}
            }
        }
        method_versions.insert(id, versions);
    }

    // calls resolve to the callee version live when the caller version appears
    let mut call_edges = Vec::new();
    for versions in method_versions.values() {
        for v in versions {
            let record = records[&v.node];
            for callee in &record.callees {
                if let Some(target) = method_versions
                    .get(callee.as_str())
                    .and_then(|vs| version_at(vs, v.start))
                {
                    if target.node != v.node {
                        call_edges.push((v.node, target.node));
                    }
                }
            }
        }
    }
    for (a, b) in call_edges {
        graph.add_edge(EdgeKind::Call, a, b, None);
    }

    // file timelines keyed by membership
    let mut file_members: BTreeMap<&str, BTreeMap<u32, BTreeSet<NodeId>>> = BTreeMap::new();
    for s in snapshots {
        for f in &s.files {
            file_members
                .entry(f.path.as_str())
                .or_default()
                .entry(s.revision)
                .or_default();
        }
        for m in &s.methods {
            let node = version_at(&method_versions[m.id.as_str()], s.revision)
                .expect("present method has a version")
                .node;
            file_members
                .entry(m.file.as_str())
                .or_default()
                .entry(s.revision)
                .or_default()
                .insert(node);
        }
    }
    for (&path, timeline) in &file_members {
        let mut current: Option<(NodeId, &BTreeSet<NodeId>)> = None;
        let mut last_node: Option<NodeId> = None;
        for &rev in &revisions {
            match (current, timeline.get(&rev)) {
                (None, Some(members)) => {
                    let node = graph.add_node(Node::code(NodeKind::File, path, rev));
                    if let Some(prev) = last_node {
                        graph.add_edge(EdgeKind::Update, prev, node, None);
                    }
                    graph.add_edge(EdgeKind::Has, repository, node, None);
                    for &m in members {
                        graph.add_edge(EdgeKind::Has, node, m, None);
                    }
                    current = Some((node, members));
                    last_node = Some(node);
                }
                (Some((prev, old)), Some(members)) if old != members => {
                    graph.nodes[prev.0].deleted_at = Some(rev);
                    let node = graph.add_node(Node::code(NodeKind::File, path, rev));
                    graph.add_edge(EdgeKind::Update, prev, node, None);
                    graph.add_edge(EdgeKind::Has, repository, node, None);
                    for &m in members {
                        graph.add_edge(EdgeKind::Has, node, m, None);
                    }
                    current = Some((node, members));
                    last_node = Some(node);
                }
                (Some((prev, _)), None) => {
                    graph.nodes[prev.0].deleted_at = Some(rev);
                    current = None;
                }
                _ => {}
            }
        }
    }

    // commits, reports, fixes
    for s in snapshots {
        for c in &s.commits {
            let mut node = Node::new(NodeKind::Commit, &c.id);
            node.timestamp = Some(c.timestamp);
            let commit = graph.add_node(node);
            for &target in touched.get(&s.revision).into_iter().flatten() {
                graph.add_edge(EdgeKind::Modify, commit, target, None);
            }
        }
    }
    let mut report_nodes: BTreeMap<&str, NodeId> = BTreeMap::new();
    for link in fix_links {
        let report = *report_nodes.entry(link.report.as_str()).or_insert_with(|| {
            let mut node = Node::new(NodeKind::BugReport, &link.report);
            node.timestamp = Some(reports[link.report.as_str()].created_at);
            graph.add_node(node)
        });
        let commit = graph
            .find(NodeKind::Commit, &link.commit, None)
            .expect("validated above");
        graph.add_edge(EdgeKind::Fix, commit, report, None);
    }

    graph.revision = revisions.last().copied();
    graph.reindex();
    Ok(graph)
}
