use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::{Arc, Mutex};

use super::tfidf::TfIdf;
use crate::corpus::{BugReportRecord, Corpus, CorpusSnapshot, Timestamp};
use crate::error::{Error, Result};
use crate::graph::{FixBipartite, SimRankConfig, SimilarityStore};

/// A report whose fix is complete, as seen by later queries.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryReport {
    pub id: String,
    pub project: String,
    pub created_at: Timestamp,
    /// Timestamp of the last linked fix commit.
    pub resolved_at: Timestamp,
    pub tokens: Vec<String>,
    /// Methods the fix modified or deleted.
    pub fixed: BTreeSet<String>,
}

/// Fixed reports of a corpus, grouped by project and ordered by resolution
/// time, with SimRank stores cached per history prefix.
#[derive(Debug)]
pub struct HistoryIndex {
    projects: BTreeMap<String, Vec<HistoryReport>>,
    simrank: SimRankConfig,
    cache: Mutex<HashMap<(String, usize), Arc<SimilarityStore>>>,
}

impl HistoryIndex {
    pub fn new(corpus: &Corpus, simrank: SimRankConfig) -> Result<Self> {
        simrank.validate()?;
        let commit_time: HashMap<&str, Timestamp> = corpus
            .commits
            .iter()
            .map(|c| (c.id.as_str(), c.timestamp))
            .collect();
        let mut projects: BTreeMap<String, Vec<HistoryReport>> = BTreeMap::new();
        for r in &corpus.reports {
            let Some(resolved_at) = r.fixed_by.iter().filter_map(|c| commit_time.get(c.as_str()).copied()).max() else {
                continue;
            };
            if resolved_at < r.created_at {
                return Err(Error::InvalidCorpus(format!(
                    "report {} is fixed before it was filed",
                    r.id
                )));
            }
            projects.entry(r.project.clone()).or_default().push(HistoryReport {
                id: r.id.clone(),
                project: r.project.clone(),
                created_at: r.created_at,
                resolved_at,
                tokens: r.tokens.clone(),
                fixed: r.fixed_methods.clone(),
            });
        }
        for reports in projects.values_mut() {
            reports.sort_by(|a, b| a.resolved_at.cmp(&b.resolved_at).then_with(|| a.id.cmp(&b.id)));
        }
        Ok(Self {
            projects,
            simrank,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn simrank_config(&self) -> SimRankConfig {
        self.simrank
    }

    /// History visible to a report of `project` filed at `query_time`:
    /// reports filed and fixed strictly before it.
    pub fn context(&self, project: &str, query_time: Timestamp) -> Result<HistoryContext<'_>> {
        let all = self.projects.get(project).map_or(&[][..], Vec::as_slice);
        let prefix = all.partition_point(|r| r.resolved_at < query_time);
        let visible = &all[..prefix];
        let store = {
            let key = (project.to_string(), prefix);
            let cached = self.cache.lock().expect("cache lock").get(&key).cloned();
            match cached {
                Some(store) => store,
                None => {
                    let store = Arc::new(simrank_over(visible, &self.simrank)?);
                    self.cache.lock().expect("cache lock").insert(key, store.clone());
                    store
                }
            }
        };
        Ok(HistoryContext::new(query_time, visible.iter().collect(), store))
    }

    pub fn context_for(&self, report: &BugReportRecord) -> Result<HistoryContext<'_>> {
        self.context(&report.project, report.created_at)
    }
}

/// SimRank over a set of history reports and the methods their fixes touched.
pub fn simrank_over(reports: &[HistoryReport], cfg: &SimRankConfig) -> Result<SimilarityStore> {
    let pairs = reports
        .iter()
        .map(|r| (r.id.clone(), r.fixed.clone()))
        .collect();
    SimilarityStore::compute(&FixBipartite::from_pairs(pairs), cfg)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct FixStats {
    count: usize,
    latest: Timestamp,
}

/// Everything the fixing features may read for one query report.
#[derive(Debug, Clone)]
pub struct HistoryContext<'a> {
    pub query_time: Timestamp,
    /// Previous reports ordered by filing time.
    pub reports: Vec<&'a HistoryReport>,
    pub store: Arc<SimilarityStore>,
    pub tfidf: TfIdf,
    revision: Option<HashSet<String>>,
    stats: HashMap<String, FixStats>,
}

impl<'a> HistoryContext<'a> {
    pub fn new(query_time: Timestamp, mut reports: Vec<&'a HistoryReport>, store: Arc<SimilarityStore>) -> Self {
        reports.retain(|r| r.created_at < query_time && r.resolved_at < query_time);
        reports.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.id.cmp(&b.id)));
        let tfidf = TfIdf::new(reports.iter().map(|r| &r.tokens));
        let mut stats: HashMap<String, FixStats> = HashMap::new();
        for r in &reports {
            for m in &r.fixed {
                let s = stats.entry(m.clone()).or_insert(FixStats {
                    count: 0,
                    latest: r.created_at,
                });
                s.count += 1;
                s.latest = s.latest.max(r.created_at);
            }
        }
        Self {
            query_time,
            reports,
            store,
            tfidf,
            revision: None,
            stats,
        }
    }

    /// Restricts feature queries to the methods of `snapshot`.
    pub fn with_revision(mut self, snapshot: &CorpusSnapshot) -> Self {
        self.revision = Some(snapshot.methods.iter().map(|m| m.id.clone()).collect());
        self
    }

    pub(crate) fn check_method(&self, id: &str) -> Result<()> {
        match &self.revision {
            Some(ids) if !ids.contains(id) => Err(Error::UnresolvedReference(format!(
                "method {id} is not in the before-fix revision"
            ))),
            _ => Ok(()),
        }
    }

    /// Number of previous reports whose fix touched `method`.
    pub fn bffs(&self, method: &str) -> f64 {
        self.stats.get(method).map_or(0.0, |s| s.count as f64)
    }

    /// `1 / (k + 1)` with `k` the whole 30-day periods since the latest
    /// previous report fixed in `method`; 0 if there is none.
    pub fn bfrs(&self, method: &str) -> f64 {
        let Some(s) = self.stats.get(method) else {
            return 0.0;
        };
        let k = (self.query_time - s.latest).max(0) / MONTH;
        1.0 / (k as f64 + 1.0)
    }
}

pub const MONTH: Timestamp = 30 * crate::corpus::SECONDS_PER_DAY;
