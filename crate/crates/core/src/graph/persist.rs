//! Line-oriented graph store.
//!
//! ```text
//! revloc-graph 1
//! revision <n|->
//! N <kind> <revision|-> <deleted_at|-> <timestamp|-> <key>
//! E <kind> <source> <target> <weight|->
//! ```
//!
//! Fields are tab separated. Node indices are implicit in the order of `N`
//! lines. Keys escape backslash, tab, newline and carriage return.

use std::io::{BufRead, Write};

use super::{Edge, EdgeKind, Node, NodeId, NodeKind, RevisionGraph};
use crate::error::{Error, Result};

const MAGIC: &str = "revloc-graph 1";

fn node_kind(kind: NodeKind) -> &'static str {
    match kind {
        NodeKind::Repository => "repository",
        NodeKind::BugReport => "report",
        NodeKind::Commit => "commit",
        NodeKind::File => "file",
        NodeKind::Method => "method",
    }
}

fn parse_node_kind(s: &str) -> Option<NodeKind> {
    Some(match s {
        "repository" => NodeKind::Repository,
        "report" => NodeKind::BugReport,
        "commit" => NodeKind::Commit,
        "file" => NodeKind::File,
        "method" => NodeKind::Method,
        _ => return None,
    })
}

fn edge_kind(kind: EdgeKind) -> &'static str {
    match kind {
        EdgeKind::Has => "has",
        EdgeKind::Modify => "modify",
        EdgeKind::Call => "call",
        EdgeKind::Fix => "fix",
        EdgeKind::SimilarTo => "similar-to",
        EdgeKind::Update => "update",
    }
}

fn parse_edge_kind(s: &str) -> Option<EdgeKind> {
    Some(match s {
        "has" => EdgeKind::Has,
        "modify" => EdgeKind::Modify,
        "call" => EdgeKind::Call,
        "fix" => EdgeKind::Fix,
        "similar-to" => EdgeKind::SimilarTo,
        "update" => EdgeKind::Update,
        _ => return None,
    })
}

fn escape(key: &str) -> String {
    let mut out = String::with_capacity(key.len());
    for c in key.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(raw: &str) -> Option<String> {
    let mut out = String::with_capacity(raw.len());
    let mut chars = raw.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        out.push(match chars.next()? {
            '\\' => '\\',
            't' => '\t',
            'n' => '\n',
            'r' => '\r',
            _ => return None,
        });
    }
    Some(out)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

fn parse_opt<T: std::str::FromStr>(s: &str) -> std::result::Result<Option<T>, ()> {
    if s == "-" {
        Ok(None)
    } else {
        s.parse().map(Some).map_err(|_| ())
    }
}

impl RevisionGraph {
    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{MAGIC}")?;
        writeln!(w, "revision\t{}", opt(self.revision))?;
        for n in &self.nodes {
            writeln!(
                w,
                "N\t{}\t{}\t{}\t{}\t{}",
                node_kind(n.kind),
                opt(n.revision),
                opt(n.deleted_at),
                opt(n.timestamp),
                escape(&n.key)
            )?;
        }
        for e in &self.edges {
            // f64 Display is shortest round-trip, so weights reload bit-exact
            writeln!(
                w,
                "E\t{}\t{}\t{}\t{}",
                edge_kind(e.kind),
                e.source.0,
                e.target.0,
                opt(e.weight)
            )?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(r: R) -> Result<RevisionGraph> {
        let mut lines = r.lines().enumerate();
        let bad = |line: usize, message: &str| Error::Parse {
            line: line + 1,
            message: format!("graph store: {message}"),
        };
        match lines.next() {
            Some((_, Ok(l))) if l == MAGIC => {}
            Some((i, Ok(_))) => return Err(bad(i, "not a revloc graph store")),
            Some((_, Err(e))) => return Err(e.into()),
            None => return Err(bad(0, "empty file")),
        }
        let mut graph = RevisionGraph::new();
        let mut saw_revision = false;
        for (i, line) in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match fields[0] {
                "revision" if fields.len() == 2 && !saw_revision => {
                    graph.revision = parse_opt(fields[1]).map_err(|_| bad(i, "bad revision"))?;
                    saw_revision = true;
                }
                "N" if fields.len() == 6 => {
                    let kind = parse_node_kind(fields[1]).ok_or_else(|| bad(i, "unknown node kind"))?;
                    let node = Node {
                        kind,
                        revision: parse_opt(fields[2]).map_err(|_| bad(i, "bad node revision"))?,
                        deleted_at: parse_opt(fields[3]).map_err(|_| bad(i, "bad deletion mark"))?,
                        timestamp: parse_opt(fields[4]).map_err(|_| bad(i, "bad timestamp"))?,
                        key: unescape(fields[5]).ok_or_else(|| bad(i, "bad key escape"))?,
                    };
                    graph.nodes.push(node);
                }
                "E" if fields.len() == 5 => {
                    let kind = parse_edge_kind(fields[1]).ok_or_else(|| bad(i, "unknown edge kind"))?;
                    let endpoint = |s: &str| -> Result<NodeId> {
                        let idx: usize = s.parse().map_err(|_| bad(i, "bad edge endpoint"))?;
                        if idx >= graph.nodes.len() {
                            return Err(bad(i, "edge references a missing node"));
                        }
                        Ok(NodeId(idx))
                    };
                    let edge = Edge {
                        kind,
                        source: endpoint(fields[2])?,
                        target: endpoint(fields[3])?,
                        weight: parse_opt(fields[4]).map_err(|_| bad(i, "bad edge weight"))?,
                    };
                    graph.edges.push(edge);
                }
                _ => return Err(bad(i, "unrecognized record")),
            }
        }
        if !saw_revision {
            return Err(bad(1, "missing revision header"));
        }
        graph.reindex();
        Ok(graph)
    }
}
