//! SimRank over the bipartite report ↔ method fix structure.
//!
//! Two reports are similar when the methods their fixes modified are
//! similar, and two methods are similar when the reports that modified them
//! are similar:
//!
//! ```text
//! Sb(i,j) = C / (|M(i)| |M(j)|) * Σ_{k∈M(i)} Σ_{l∈M(j)} Sm(k,l)
//! Sm(i,j) = C / (|B(i)| |B(j)|) * Σ_{k∈B(i)} Σ_{l∈B(j)} Sb(k,l)
//! ```
//!
//! Diagonals are fixed at 1. Each iteration computes the report scores from
//! the previous method scores, then the method scores from the new report
//! scores. Pairs where either side has no neighbors stay at 0.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimRankConfig {
    pub decay: f64,
    pub iterations: usize,
    pub emit_threshold: f64,
}

impl Default for SimRankConfig {
    fn default() -> Self {
        Self {
            decay: 0.8,
            iterations: 5,
            emit_threshold: 0.001,
        }
    }
}

impl SimRankConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::Argument(format!("SimRank decay {} not in (0,1)", self.decay)));
        }
        if self.iterations == 0 {
            return Err(Error::Argument("SimRank needs at least one iteration".into()));
        }
        if !(self.emit_threshold >= 0.0) {
            return Err(Error::Argument("SimRank emit threshold must be ≥ 0".into()));
        }
        Ok(())
    }
}

/// Reports, methods, and which methods each report's fix modified.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FixBipartite {
    pub reports: Vec<String>,
    pub methods: Vec<String>,
    /// Sorted method indices per report.
    pub report_methods: Vec<Vec<usize>>,
    /// Sorted report indices per method.
    pub method_reports: Vec<Vec<usize>>,
}

impl FixBipartite {
    /// Reports are kept even when they modified nothing.
    pub fn from_pairs(pairs: BTreeMap<String, BTreeSet<String>>) -> Self {
        let methods: Vec<String> = pairs
            .values()
            .flatten()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let method_index: BTreeMap<&str, usize> =
            methods.iter().enumerate().map(|(i, m)| (m.as_str(), i)).collect();
        let mut report_methods = Vec::with_capacity(pairs.len());
        let mut method_reports = vec![Vec::new(); methods.len()];
        let mut reports = Vec::with_capacity(pairs.len());
        for (r, (report, ms)) in pairs.iter().enumerate() {
            let idx: Vec<usize> = ms.iter().map(|m| method_index[m.as_str()]).collect();
            for &m in &idx {
                method_reports[m].push(r);
            }
            report_methods.push(idx);
            reports.push(report.clone());
        }
        Self {
            reports,
            methods,
            report_methods,
            method_reports,
        }
    }
}

/// Sparse symmetric score matrix with an implicit unit diagonal. Rows hold
/// `(column, score)` for nonzero off-diagonal entries, sorted by column.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseSym {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseSym {
    fn identity(n: usize) -> Self {
        Self {
            rows: vec![Vec::new(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 1.0;
        }
        let row = &self.rows[i];
        row.binary_search_by_key(&j, |&(c, _)| c)
            .map_or(0.0, |k| row[k].1)
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }
}

/// One side of the update: new scores for the `left` entities given the
/// other side's scores `other` and the adjacency `left → right`, `right → left`.
fn sweep(
    decay: f64,
    left_adj: &[Vec<usize>],
    right_adj: &[Vec<usize>],
    other: &SparseSym,
) -> SparseSym {
    let n_left = left_adj.len();
    let n_right = right_adj.len();
    let mut partial = vec![0.0; n_right];
    let mut partial_touched: Vec<usize> = Vec::new();
    let mut acc = vec![0.0; n_left];
    let mut acc_touched: Vec<usize> = Vec::new();
    let mut rows = vec![Vec::new(); n_left];

    for i in 0..n_left {
        let mi = &left_adj[i];
        if mi.is_empty() {
            continue;
        }
        // partial[l] = Σ_{k ∈ N(i)} other(k, l)
        for &k in mi {
            let diag = std::iter::once((k, 1.0));
            for (l, s) in diag.chain(other.row(k).iter().copied()) {
                if partial[l] == 0.0 {
                    partial_touched.push(l);
                }
                partial[l] += s;
            }
        }
        partial_touched.sort_unstable();
        // acc[j] = Σ_{l ∈ N(j)} partial[l]
        for &l in &partial_touched {
            let p = partial[l];
            for &j in &right_adj[l] {
                if j <= i {
                    continue;
                }
                if acc[j] == 0.0 {
                    acc_touched.push(j);
                }
                acc[j] += p;
            }
        }
        acc_touched.sort_unstable();
        for &j in &acc_touched {
            let denom = (mi.len() * left_adj[j].len()) as f64;
            let score = decay * acc[j] / denom;
            if score != 0.0 {
                rows[i].push((j, score));
            }
            acc[j] = 0.0;
        }
        acc_touched.clear();
        for &l in &partial_touched {
            partial[l] = 0.0;
        }
        partial_touched.clear();
    }
    // mirror the upper triangle
    let upper: Vec<(usize, usize, f64)> = rows
        .iter()
        .enumerate()
        .flat_map(|(i, r)| r.iter().map(move |&(j, s)| (i, j, s)))
        .collect();
    for (i, j, s) in upper {
        rows[j].push((i, s));
    }
    for r in rows.iter_mut() {
        r.sort_unstable_by_key(|&(c, _)| c);
    }
    SparseSym { rows }
}

/// Full (unthresholded) SimRank scores.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRankScores {
    pub report: SparseSym,
    pub method: SparseSym,
}

impl SimRankScores {
    pub fn compute(graph: &FixBipartite, cfg: &SimRankConfig) -> Result<Self> {
        cfg.validate()?;
        let mut report = SparseSym::identity(graph.reports.len());
        let mut method = SparseSym::identity(graph.methods.len());
        for _ in 0..cfg.iterations {
            report = sweep(cfg.decay, &graph.report_methods, &graph.method_reports, &method);
            method = sweep(cfg.decay, &graph.method_reports, &graph.report_methods, &report);
        }
        Ok(Self { report, method })
    }

    /// Keeps off-diagonal pairs scoring above `cfg.emit_threshold`.
    pub fn into_store(self, graph: &FixBipartite, cfg: &SimRankConfig) -> SimilarityStore {
        let emit = |m: &SparseSym, names: &[String]| {
            let mut out: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
            for i in 0..m.len() {
                for &(j, s) in m.row(i) {
                    if s > cfg.emit_threshold {
                        out.entry(names[i].clone()).or_default().insert(names[j].clone(), s);
                    }
                }
            }
            out
        };
        SimilarityStore {
            reports: emit(&self.report, &graph.reports),
            methods: emit(&self.method, &graph.methods),
        }
    }
}

/// Similar-to relations: symmetric sparse maps of report and method scores.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimilarityStore {
    reports: BTreeMap<String, BTreeMap<String, f64>>,
    methods: BTreeMap<String, BTreeMap<String, f64>>,
}

fn lookup(map: &BTreeMap<String, BTreeMap<String, f64>>, a: &str, b: &str) -> f64 {
    if a == b {
        return 1.0;
    }
    map.get(a).and_then(|row| row.get(b)).copied().unwrap_or(0.0)
}

fn pairs(map: &BTreeMap<String, BTreeMap<String, f64>>) -> impl Iterator<Item = (&str, &str, f64)> {
    map.iter().flat_map(|(a, row)| {
        row.iter()
            .filter(move |(b, _)| a < *b)
            .map(move |(b, &s)| (a.as_str(), b.as_str(), s))
    })
}

impl SimilarityStore {
    pub fn compute(graph: &FixBipartite, cfg: &SimRankConfig) -> Result<Self> {
        Ok(SimRankScores::compute(graph, cfg)?.into_store(graph, cfg))
    }

    /// Builds a store from explicit pair scores; each pair is stored in both
    /// directions and self-pairs are ignored.
    pub fn from_scores<'a>(
        reports: impl IntoIterator<Item = (&'a str, &'a str, f64)>,
        methods: impl IntoIterator<Item = (&'a str, &'a str, f64)>,
    ) -> Self {
        fn fill<'a>(it: impl IntoIterator<Item = (&'a str, &'a str, f64)>) -> BTreeMap<String, BTreeMap<String, f64>> {
            let mut out: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
            for (a, b, s) in it {
                if a == b || s == 0.0 {
                    continue;
                }
                out.entry(a.to_string()).or_default().insert(b.to_string(), s);
                out.entry(b.to_string()).or_default().insert(a.to_string(), s);
            }
            out
        }
        Self {
            reports: fill(reports),
            methods: fill(methods),
        }
    }

    pub fn report_score(&self, a: &str, b: &str) -> f64 {
        lookup(&self.reports, a, b)
    }

    pub fn method_score(&self, a: &str, b: &str) -> f64 {
        lookup(&self.methods, a, b)
    }

    /// Stored partners of a report, by id.
    pub fn report_row(&self, id: &str) -> impl Iterator<Item = (&str, f64)> {
        self.reports
            .get(id)
            .into_iter()
            .flatten()
            .map(|(k, &s)| (k.as_str(), s))
    }

    pub fn method_row(&self, id: &str) -> impl Iterator<Item = (&str, f64)> {
        self.methods
            .get(id)
            .into_iter()
            .flatten()
            .map(|(k, &s)| (k.as_str(), s))
    }

    /// Similar methods by descending score, ties by id.
    pub fn similar_methods(&self, id: &str) -> Vec<(&str, f64)> {
        let mut v: Vec<(&str, f64)> = self.method_row(id).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        v
    }

    /// Each unordered report pair once.
    pub fn report_pairs(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        pairs(&self.reports)
    }

    pub fn method_pairs(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        pairs(&self.methods)
    }

    pub fn report_pair_count(&self) -> usize {
        self.report_pairs().count()
    }

    pub fn method_pair_count(&self) -> usize {
        self.method_pairs().count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bipartite(spec: &[(&str, &[&str])]) -> FixBipartite {
        FixBipartite::from_pairs(
            spec.iter()
                .map(|(r, ms)| (r.to_string(), ms.iter().map(|m| m.to_string()).collect()))
                .collect(),
        )
    }

    #[test]
    fn reports_sharing_a_single_method() {
        let g = bipartite(&[("b1", &["m"]), ("b2", &["m"])]);
        for iterations in 1..=6 {
            let cfg = SimRankConfig {
                iterations,
                ..SimRankConfig::default()
            };
            let s = SimRankScores::compute(&g, &cfg).unwrap();
            assert_eq!(s.report.get(0, 1), 0.8);
            assert_eq!(s.report.get(1, 0), 0.8);
        }
    }

    #[test]
    fn disjoint_fix_sets_score_zero() {
        let g = bipartite(&[("b1", &["m1"]), ("b2", &["m2"])]);
        let s = SimRankScores::compute(&g, &SimRankConfig::default()).unwrap();
        assert_eq!(s.report.get(0, 1), 0.0);
        assert_eq!(s.method.get(0, 1), 0.0);
        let store = s.into_store(&g, &SimRankConfig::default());
        assert_eq!(store.report_pair_count(), 0);
        assert_eq!(store.report_score("b1", "b1"), 1.0);
    }

    #[test]
    fn report_without_methods_stays_unrelated() {
        let g = bipartite(&[("b1", &["m1"]), ("b2", &[]), ("b3", &["m1"])]);
        let s = SimRankScores::compute(&g, &SimRankConfig::default()).unwrap();
        assert_eq!(s.report.get(0, 1), 0.0);
        assert_eq!(s.report.get(0, 2), 0.8);
    }

    #[test]
    fn methods_fixed_together_are_similar() {
        let g = bipartite(&[("b1", &["m1", "m2"]), ("b2", &["m1", "m2"])]);
        let store = SimilarityStore::compute(&g, &SimRankConfig::default()).unwrap();
        assert!(store.method_score("m1", "m2") > 0.5);
        assert_eq!(store.similar_methods("m1")[0].0, "m2");
        assert_eq!(store.method_pair_count(), 1);
    }

    #[test]
    fn rejects_bad_config() {
        for cfg in [
            SimRankConfig { decay: 1.0, ..SimRankConfig::default() },
            SimRankConfig { decay: 0.0, ..SimRankConfig::default() },
            SimRankConfig { iterations: 0, ..SimRankConfig::default() },
            SimRankConfig { emit_threshold: -1.0, ..SimRankConfig::default() },
        ] {
            assert!(cfg.validate().is_err());
        }
    }
}
