//! Code revision graphs.
//!
//! Entities are repositories, bug reports, commits, files and methods. Code
//! entities carry the revision at which their version was introduced; a
//! modified method becomes a new node linked from its previous version by an
//! `update` edge, and deleted code entities are tombstoned rather than
//! removed so that history stays queryable.

mod build;
mod persist;
pub mod simrank;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::corpus::{ChangeKind, CorpusSnapshot, MethodChange, Timestamp};
use crate::error::{Error, Result};

pub use build::build_graph;
pub use simrank::{FixBipartite, SimRankConfig, SimRankScores, SimilarityStore};

pub const REPOSITORY_KEY: &str = "repository";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Repository,
    BugReport,
    Commit,
    File,
    Method,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeKind {
    Has,
    Modify,
    Call,
    Fix,
    SimilarTo,
    Update,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Node {
    pub kind: NodeKind,
    pub key: String,
    pub revision: Option<u32>,
    /// First revision at which this version no longer exists, whether the
    /// entity was deleted or superseded by a newer version.
    pub deleted_at: Option<u32>,
    pub timestamp: Option<Timestamp>,
}

impl Node {
    fn new(kind: NodeKind, key: impl Into<String>) -> Self {
        Self {
            kind,
            key: key.into(),
            revision: None,
            deleted_at: None,
            timestamp: None,
        }
    }

    fn code(kind: NodeKind, key: impl Into<String>, revision: u32) -> Self {
        Self {
            revision: Some(revision),
            ..Self::new(kind, key)
        }
    }

    /// Whether this code version exists at `revision`.
    pub fn live_at(&self, revision: u32) -> bool {
        self.revision.is_some_and(|r| r <= revision) && self.deleted_at.is_none_or(|d| d > revision)
    }

    /// Deleted or superseded.
    pub fn is_deleted(&self) -> bool {
        self.deleted_at.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub kind: EdgeKind,
    pub source: NodeId,
    pub target: NodeId,
    /// Similarity score for `similar-to` edges.
    pub weight: Option<f64>,
}

/// Node description used for structural comparison.
pub type NodeDesc = (NodeKind, String, Option<u32>, Option<u32>, Option<Timestamp>);
/// Edge description with endpoints replaced by their node descriptions.
pub type EdgeDesc = (EdgeKind, NodeDesc, NodeDesc, Option<u64>);

#[derive(Debug, Clone, Default)]
pub struct RevisionGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    revision: Option<u32>,
    // derived state, rebuilt by `reindex`
    index: HashMap<(NodeKind, String, Option<u32>), NodeId>,
    method_versions: HashMap<String, Vec<NodeId>>,
    file_versions: HashMap<String, Vec<NodeId>>,
    outgoing: Vec<Vec<usize>>,
}

impl PartialEq for RevisionGraph {
    fn eq(&self, other: &Self) -> bool {
        self.revision == other.revision
            && self.nodes == other.nodes
            && self.edges.len() == other.edges.len()
            && self.edges.iter().zip(&other.edges).all(|(a, b)| {
                a.kind == b.kind
                    && a.source == b.source
                    && a.target == b.target
                    && a.weight.map(f64::to_bits) == b.weight.map(f64::to_bits)
            })
    }
}

impl RevisionGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Latest revision merged into the graph.
    pub fn revision(&self) -> Option<u32> {
        self.revision
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn find(&self, kind: NodeKind, key: &str, revision: Option<u32>) -> Option<NodeId> {
        self.index.get(&(kind, key.to_string(), revision)).copied()
    }

    pub fn count_nodes(&self, kind: NodeKind) -> usize {
        self.nodes.iter().filter(|n| n.kind == kind).count()
    }

    pub fn count_edges(&self, kind: EdgeKind) -> usize {
        self.edges.iter().filter(|e| e.kind == kind).count()
    }

    pub fn outgoing(&self, node: NodeId, kind: EdgeKind) -> impl Iterator<Item = &Edge> + '_ {
        self.outgoing
            .get(node.0)
            .into_iter()
            .flatten()
            .map(move |&e| &self.edges[e])
            .filter(move |e| e.kind == kind)
    }

    pub fn incoming(&self, node: NodeId, kind: EdgeKind) -> impl Iterator<Item = &Edge> + '_ {
        self.edges
            .iter()
            .filter(move |e| e.kind == kind && e.target == node)
    }

    /// All versions of a method, oldest first.
    pub fn method_versions(&self, id: &str) -> &[NodeId] {
        self.method_versions.get(id).map_or(&[], Vec::as_slice)
    }

    pub fn file_versions(&self, path: &str) -> &[NodeId] {
        self.file_versions.get(path).map_or(&[], Vec::as_slice)
    }

    /// The version of a method live at `revision`.
    pub fn method_at(&self, id: &str, revision: u32) -> Option<NodeId> {
        self.method_versions(id)
            .iter()
            .rev()
            .copied()
            .find(|&n| self.nodes[n.0].live_at(revision))
    }

    /// The non-deleted version of a method, if any.
    pub fn live_method(&self, id: &str) -> Option<NodeId> {
        self.method_versions(id)
            .last()
            .copied()
            .filter(|&n| !self.nodes[n.0].is_deleted())
    }

    /// Method ids with a version live at `revision`, sorted.
    pub fn live_methods_at(&self, revision: u32) -> Vec<&str> {
        let mut ids: Vec<&str> = self
            .method_versions
            .iter()
            .filter(|(_, vs)| vs.iter().any(|n| self.nodes[n.0].live_at(revision)))
            .map(|(id, _)| id.as_str())
            .collect();
        ids.sort_unstable();
        ids
    }

    fn add_node(&mut self, node: Node) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.index
            .insert((node.kind, node.key.clone(), node.revision), id);
        match node.kind {
            NodeKind::Method => self.method_versions.entry(node.key.clone()).or_default().push(id),
            NodeKind::File => self.file_versions.entry(node.key.clone()).or_default().push(id),
            _ => {}
        }
        self.nodes.push(node);
        self.outgoing.push(Vec::new());
        id
    }

    fn add_edge(&mut self, kind: EdgeKind, source: NodeId, target: NodeId, weight: Option<f64>) {
        self.outgoing[source.0].push(self.edges.len());
        self.edges.push(Edge {
            kind,
            source,
            target,
            weight,
        });
    }

    fn reindex(&mut self) {
        self.index.clear();
        self.method_versions.clear();
        self.file_versions.clear();
        for (i, node) in self.nodes.iter().enumerate() {
            let id = NodeId(i);
            self.index
                .insert((node.kind, node.key.clone(), node.revision), id);
            match node.kind {
                NodeKind::Method => self.method_versions.entry(node.key.clone()).or_default().push(id),
                NodeKind::File => self.file_versions.entry(node.key.clone()).or_default().push(id),
                _ => {}
            }
        }
        for versions in self.method_versions.values_mut().chain(self.file_versions.values_mut()) {
            versions.sort_by_key(|n| self.nodes[n.0].revision);
        }
        self.outgoing = vec![Vec::new(); self.nodes.len()];
        for (i, e) in self.edges.iter().enumerate() {
            self.outgoing[e.source.0].push(i);
        }
    }

    fn describe(&self, id: NodeId) -> NodeDesc {
        let n = &self.nodes[id.0];
        (n.kind, n.key.clone(), n.revision, n.deleted_at, n.timestamp)
    }

    /// Sorted node and edge multisets; two graphs with equal canonical forms
    /// are isomorphic including all revision attributes.
    pub fn canonical(&self) -> (Vec<NodeDesc>, Vec<EdgeDesc>) {
        let mut nodes: Vec<NodeDesc> = (0..self.nodes.len()).map(|i| self.describe(NodeId(i))).collect();
        nodes.sort();
        let mut edges: Vec<EdgeDesc> = self
            .edges
            .iter()
            .map(|e| {
                (
                    e.kind,
                    self.describe(e.source),
                    self.describe(e.target),
                    e.weight.map(f64::to_bits),
                )
            })
            .collect();
        edges.sort();
        (nodes, edges)
    }

    pub fn same_structure(&self, other: &RevisionGraph) -> bool {
        self.revision == other.revision && self.canonical() == other.canonical()
    }

    fn repository(&mut self) -> NodeId {
        match self.find(NodeKind::Repository, REPOSITORY_KEY, None) {
            Some(id) => id,
            None => self.add_node(Node::new(NodeKind::Repository, REPOSITORY_KEY)),
        }
    }

    fn latest_file(&self, path: &str) -> Option<NodeId> {
        self.file_versions(path).last().copied()
    }

    /// Members of the latest version of a file, as method node ids.
    fn file_members(&self, file: NodeId) -> BTreeSet<NodeId> {
        self.outgoing(file, EdgeKind::Has).map(|e| e.target).collect()
    }

    /// Merges one revision given its method-level change set.
    ///
    /// Additions insert new method nodes, modifications insert a new version
    /// linked by an `update` edge, deletions tombstone the live version.
    /// Files whose membership changes get a new version the same way.
    pub fn apply_revision(&mut self, changes: &[MethodChange], snapshot: &CorpusSnapshot) -> Result<()> {
        let rev = snapshot.revision;
        if let Some(current) = self.revision {
            if rev != current + 1 {
                return Err(Error::RevisionOrder {
                    expected: current + 1,
                    found: rev,
                });
            }
        }
        let records = snapshot.method_index();
        for change in changes {
            let live = self.live_method(&change.method).is_some();
            let present = records.contains_key(change.method.as_str());
            let ok = match change.kind {
                ChangeKind::Addition => present && !live,
                ChangeKind::Modification => present && live,
                ChangeKind::Deletion => live,
            };
            if !ok {
                return Err(Error::UnresolvedReference(format!(
                    "{} of method {} at revision {rev}",
                    change.kind.as_str(),
                    change.method
                )));
            }
        }
        let reports: HashMap<&str, Timestamp> = snapshot
            .reports
            .iter()
            .map(|r| (r.id.as_str(), r.created_at))
            .collect();
        for link in &snapshot.fixes {
            let commit_known = snapshot.commits.iter().any(|c| c.id == link.commit)
                || self.find(NodeKind::Commit, &link.commit, None).is_some();
            if !commit_known || !reports.contains_key(link.report.as_str()) {
                return Err(Error::UnresolvedReference(format!(
                    "fix link {} -> {}",
                    link.commit, link.report
                )));
            }
        }

        let repository = self.repository();

        // methods
        let mut touched = Vec::with_capacity(changes.len());
        let mut created = Vec::new();
        for change in changes {
            let node = match change.kind {
                ChangeKind::Addition | ChangeKind::Modification => {
                    let previous = self.method_versions(&change.method).last().copied();
                    let node = self.add_node(Node::code(NodeKind::Method, &change.method, rev));
                    if let Some(prev) = previous {
                        self.nodes[prev.0].deleted_at.get_or_insert(rev);
                        self.add_edge(EdgeKind::Update, prev, node, None);
                    }
                    created.push(node);
                    node
                }
                ChangeKind::Deletion => {
                    let node = self.live_method(&change.method).expect("validated above");
                    self.nodes[node.0].deleted_at = Some(rev);
                    node
                }
            };
            touched.push(node);
        }
        for &node in &created {
            let record = records[self.nodes[node.0].key.as_str()];
            for callee in &record.callees {
                if let Some(target) = self.live_method(callee) {
                    if target != node {
                        self.add_edge(EdgeKind::Call, node, target, None);
                    }
                }
            }
        }

        // files
        let mut membership: BTreeMap<&str, BTreeSet<NodeId>> = BTreeMap::new();
        for f in &snapshot.files {
            membership.entry(f.path.as_str()).or_default();
        }
        for m in &snapshot.methods {
            let node = self.live_method(&m.id).ok_or_else(|| {
                Error::UnresolvedReference(format!(
                    "method {} present at revision {rev} but missing from the change set",
                    m.id
                ))
            })?;
            membership.entry(m.file.as_str()).or_default().insert(node);
        }
        let mut known_paths: Vec<String> = self.file_versions.keys().cloned().collect();
        known_paths.sort();
        for path in known_paths {
            if membership.contains_key(path.as_str()) {
                continue;
            }
            let latest = self.latest_file(&path).expect("known path");
            if !self.nodes[latest.0].is_deleted() {
                self.nodes[latest.0].deleted_at = Some(rev);
            }
        }
        for (path, members) in membership {
            let latest = self.latest_file(path);
            let unchanged = latest.is_some_and(|f| {
                !self.nodes[f.0].is_deleted() && self.file_members(f) == members
            });
            if unchanged {
                continue;
            }
            let node = self.add_node(Node::code(NodeKind::File, path, rev));
            if let Some(prev) = latest {
                self.nodes[prev.0].deleted_at.get_or_insert(rev);
                self.add_edge(EdgeKind::Update, prev, node, None);
            }
            self.add_edge(EdgeKind::Has, repository, node, None);
            for m in members {
                self.add_edge(EdgeKind::Has, node, m, None);
            }
        }

        // history
        for c in &snapshot.commits {
            let mut node = Node::new(NodeKind::Commit, &c.id);
            node.timestamp = Some(c.timestamp);
            let commit = self.add_node(node);
            for &target in &touched {
                self.add_edge(EdgeKind::Modify, commit, target, None);
            }
        }
        for link in &snapshot.fixes {
            let report = match self.find(NodeKind::BugReport, &link.report, None) {
                Some(id) => id,
                None => {
                    let mut node = Node::new(NodeKind::BugReport, &link.report);
                    node.timestamp = Some(reports[link.report.as_str()]);
                    self.add_node(node)
                }
            };
            let commit = self
                .find(NodeKind::Commit, &link.commit, None)
                .expect("validated above");
            self.add_edge(EdgeKind::Fix, commit, report, None);
        }
        self.revision = Some(rev);
        Ok(())
    }

    /// Merges a snapshot, diffing it against `previous` (the snapshot the
    /// graph currently reflects, or `None` for the first revision).
    pub fn merge_snapshot(&mut self, previous: Option<&CorpusSnapshot>, snapshot: &CorpusSnapshot) -> Result<()> {
        let changes = match previous {
            Some(prev) => crate::corpus::diff_revisions(prev, snapshot)?,
            None => crate::corpus::diff::diff_methods(&[], &snapshot.methods),
        };
        self.apply_revision(&changes, snapshot)
    }

    /// Method ids modified by the fix commits of each report.
    pub fn fix_bipartite(&self) -> FixBipartite {
        let mut pairs: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if node.kind != NodeKind::BugReport {
                continue;
            }
            let methods = pairs.entry(node.key.clone()).or_default();
            for fix in self.incoming(NodeId(i), EdgeKind::Fix) {
                for modify in self.outgoing(fix.source, EdgeKind::Modify) {
                    methods.insert(self.nodes[modify.target.0].key.clone());
                }
            }
        }
        FixBipartite::from_pairs(pairs)
    }

    /// Replaces all `similar-to` edges with those of `store`, attached to the
    /// latest version of each method.
    pub fn attach_similarity(&mut self, store: &SimilarityStore) {
        let kept: Vec<Edge> = self
            .edges
            .iter()
            .filter(|e| e.kind != EdgeKind::SimilarTo)
            .copied()
            .collect();
        self.edges = kept;
        self.reindex();
        for (a, b, score) in store.report_pairs() {
            let (Some(x), Some(y)) = (
                self.find(NodeKind::BugReport, a, None),
                self.find(NodeKind::BugReport, b, None),
            ) else {
                continue;
            };
            self.add_edge(EdgeKind::SimilarTo, x, y, Some(score));
        }
        for (a, b, score) in store.method_pairs() {
            let (Some(x), Some(y)) = (
                self.method_versions(a).last().copied(),
                self.method_versions(b).last().copied(),
            ) else {
                continue;
            };
            self.add_edge(EdgeKind::SimilarTo, x, y, Some(score));
        }
    }

    /// Relevant methods for expansion: methods similar by fix history
    /// (descending score, at most `limit`) and callees of the version live at
    /// `revision` (or the latest live version).
    pub fn neighbors(
        &self,
        store: &SimilarityStore,
        method: &str,
        revision: Option<u32>,
        limit: usize,
    ) -> Result<(Vec<(String, f64)>, Vec<String>)> {
        let node = match revision {
            Some(r) => self.method_at(method, r),
            None => self.live_method(method),
        }
        .ok_or_else(|| Error::UnresolvedReference(format!("method {method}")))?;
        let similar: Vec<(String, f64)> = store
            .similar_methods(method)
            .into_iter()
            .take(limit)
            .map(|(id, s)| (id.to_string(), s))
            .collect();
        let calls: BTreeSet<String> = self
            .outgoing(node, EdgeKind::Call)
            .map(|e| self.nodes[e.target.0].key.clone())
            .filter(|k| k != method)
            .collect();
        Ok((similar, calls.into_iter().collect()))
    }
}
