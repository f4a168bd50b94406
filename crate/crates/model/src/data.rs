use std::collections::{BTreeMap, BTreeSet, HashMap};

use revloc_core::corpus::{BugReportRecord, Corpus, CorpusSnapshot, Timestamp};
use revloc_core::eval::{categorize_report, Localization};
use revloc_core::features::{rcfs_scores, FixingFeatures, HistoryIndex};
use revloc_core::graph::SimRankConfig;

use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::network::MethodViews;
use crate::vocab::Vocabulary;

/// One recorded version of a method.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodVersion {
    pub id: String,
    pub name: String,
    pub revision: u32,
    pub statement_count: u32,
    pub views: MethodViews,
}

/// A method of the before-fix revision, scored for one report.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// Index into [`Dataset::versions`].
    pub version: usize,
    pub features: FixingFeatures,
    /// Related methods (similar first, then callees) used to expand short
    /// methods; empty for methods at or above the short threshold.
    pub neighbors: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportData {
    pub id: String,
    pub project: String,
    pub created_at: Timestamp,
    pub tokens: Vec<usize>,
    pub revision: u32,
    pub candidates: Vec<Candidate>,
    /// Positions in `candidates` of the methods the fix changed.
    pub truth: Vec<usize>,
    pub localization: Localization,
}

/// Everything training and ranking read, precomputed from a corpus.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub vocab: Vocabulary,
    pub versions: Vec<MethodVersion>,
    pub reports: Vec<ReportData>,
    by_id: HashMap<String, usize>,
    /// Reports without a resolvable before-fix revision.
    pub skipped: Vec<String>,
}

impl Dataset {
    /// Vocabulary over every method version and report of the corpus.
    pub fn vocabulary(corpus: &Corpus) -> Vocabulary {
        Vocabulary::build(
            corpus
                .methods
                .iter()
                .flat_map(|m| [&m.tokens, &m.api_calls, &m.comment])
                .chain(corpus.reports.iter().map(|r| &r.tokens)),
        )
    }

    pub fn build(corpus: &Corpus, simrank: SimRankConfig, cfg: &ModelConfig) -> Result<Self> {
        Self::build_with(corpus, Self::vocabulary(corpus), simrank, cfg)
    }

    /// Prepare every fixed report against `vocab` (e.g. one loaded with a
    /// trained model).
    pub fn build_with(corpus: &Corpus, vocab: Vocabulary, simrank: SimRankConfig, cfg: &ModelConfig) -> Result<Self> {
        cfg.validate()?;
        let versions: Vec<MethodVersion> = corpus
            .methods
            .iter()
            .map(|m| MethodVersion {
                id: m.id.clone(),
                name: m.name.clone(),
                revision: m.revision,
                statement_count: m.statement_count,
                views: MethodViews {
                    tokens: vocab.encode(&m.tokens, cfg.cap_method),
                    api: vocab.encode(&m.api_calls, cfg.cap_api),
                    comment: vocab.encode(&m.comment, cfg.cap_comment),
                },
            })
            .collect();
        let version_index: HashMap<(&str, u32), usize> = corpus
            .methods
            .iter()
            .enumerate()
            .map(|(i, m)| ((m.id.as_str(), m.revision), i))
            .collect();

        let mut wanted: BTreeMap<u32, Vec<&BugReportRecord>> = BTreeMap::new();
        let mut skipped = Vec::new();
        for r in &corpus.reports {
            match corpus.before_fix_revision(r) {
                Some(rev) => wanted.entry(rev).or_default().push(r),
                None => skipped.push(r.id.clone()),
            }
        }
        let history = HistoryIndex::new(corpus, simrank)?;
        let mut prepared: HashMap<&str, ReportData> = HashMap::new();
        if let Some(&last) = wanted.keys().next_back() {
            for snap in corpus.snapshots().take_while(|s| s.revision <= last) {
                let Some(reports) = wanted.get(&snap.revision) else { continue };
                for r in reports {
                    let data = prepare_report(r, &snap, &history, &vocab, &version_index, &versions, cfg)?;
                    prepared.insert(r.id.as_str(), data);
                }
            }
        }
        // corpus order, for reproducible iteration
        let reports: Vec<ReportData> = corpus
            .reports
            .iter()
            .filter_map(|r| prepared.remove(r.id.as_str()))
            .collect();
        let by_id = reports.iter().enumerate().map(|(i, r)| (r.id.clone(), i)).collect();
        Ok(Self {
            vocab,
            versions,
            reports,
            by_id,
            skipped,
        })
    }

    /// Assemble a dataset from already prepared parts, checking that every
    /// index is in range.
    pub fn from_parts(vocab: Vocabulary, versions: Vec<MethodVersion>, reports: Vec<ReportData>) -> Result<Self> {
        let in_vocab = |ids: &[usize]| ids.iter().all(|&t| t < vocab.len());
        for v in &versions {
            if !(in_vocab(&v.views.tokens) && in_vocab(&v.views.api) && in_vocab(&v.views.comment)) {
                return Err(Error::Unresolved(format!("method {} uses a token outside the vocabulary", v.id)));
            }
        }
        let mut by_id = HashMap::new();
        for (i, r) in reports.iter().enumerate() {
            let bad_candidate = r
                .candidates
                .iter()
                .any(|c| c.version >= versions.len() || c.neighbors.iter().any(|&n| n >= versions.len()));
            if bad_candidate || r.truth.iter().any(|&t| t >= r.candidates.len()) || !in_vocab(&r.tokens) {
                return Err(Error::Unresolved(format!("report {} refers outside the dataset", r.id)));
            }
            if by_id.insert(r.id.clone(), i).is_some() {
                return Err(Error::Config(format!("duplicate report {}", r.id)));
            }
        }
        Ok(Self {
            vocab,
            versions,
            reports,
            by_id,
            skipped: Vec::new(),
        })
    }

    pub fn report(&self, id: &str) -> Result<&ReportData> {
        self.by_id
            .get(id)
            .map(|&i| &self.reports[i])
            .ok_or_else(|| Error::Unresolved(format!("report {id} has no prepared revision")))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.by_id.contains_key(id)
    }

    pub fn version(&self, i: usize) -> &MethodVersion {
        &self.versions[i]
    }
}

fn prepare_report(
    r: &BugReportRecord,
    snap: &CorpusSnapshot,
    history: &HistoryIndex,
    vocab: &Vocabulary,
    version_index: &HashMap<(&str, u32), usize>,
    versions: &[MethodVersion],
    cfg: &ModelConfig,
) -> Result<ReportData> {
    let ctx = history.context_for(r)?.with_revision(snap);
    let ids: Vec<&str> = snap.methods.iter().map(|m| m.id.as_str()).collect();
    let rcfs = rcfs_scores(&r.tokens, &ids, &ctx)?;
    let live: HashMap<&str, usize> = snap
        .methods
        .iter()
        .map(|m| {
            version_index
                .get(&(m.id.as_str(), m.revision))
                .map(|&v| (m.id.as_str(), v))
                .ok_or_else(|| Error::Unresolved(format!("method {} at revision {}", m.id, m.revision)))
        })
        .collect::<Result<_>>()?;

    let mut candidates = Vec::with_capacity(snap.methods.len());
    let mut truth = Vec::new();
    let mut fixed_names = Vec::new();
    for (pos, (m, score)) in snap.methods.iter().zip(rcfs).enumerate() {
        let version = live[m.id.as_str()];
        let mut neighbors = Vec::new();
        if versions[version].statement_count < cfg.short_threshold {
            let similar = ctx
                .store
                .similar_methods(&m.id)
                .into_iter()
                .filter_map(|(id, _)| live.get(id).copied())
                .take(cfg.max_similar);
            let callees = m
                .callees
                .iter()
                .filter(|c| **c != m.id)
                .filter_map(|c| live.get(c.as_str()).copied())
                .take(cfg.max_callees);
            let mut seen = BTreeSet::new();
            neighbors = similar.chain(callees).filter(|v| seen.insert(*v)).collect();
        }
        if r.fixed_methods.contains(&m.id) {
            truth.push(pos);
            fixed_names.push(m.name.as_str());
        }
        candidates.push(Candidate {
            version,
            features: FixingFeatures {
                rcfs: score,
                bffs: ctx.bffs(&m.id),
                bfrs: ctx.bfrs(&m.id),
            },
            neighbors,
        });
    }
    let localization = if fixed_names.is_empty() {
        Localization::Not
    } else {
        categorize_report(&r.tokens, &fixed_names)
    };
    Ok(ReportData {
        id: r.id.clone(),
        project: r.project.clone(),
        created_at: r.created_at,
        tokens: vocab.encode(&r.tokens, cfg.cap_report),
        revision: snap.revision,
        candidates,
        truth,
        localization,
    })
}
