use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use log::info;
use revloc_core::corpus::ingest::normalize;
use revloc_core::corpus::jsonl::{read_records, write_records};
use revloc_core::corpus::{Corpus, CorpusSnapshot};
use revloc_core::eval::{plan_folds, MetricReport};
use revloc_core::features::{report_features, write_feature_rows, HistoryIndex, DUMP_HEADER};
use revloc_core::graph::{build_graph, RevisionGraph, SimilarityStore};
use revloc_core::synthetic::{generate_records, SyntheticConfig};
use revloc_model::{Dataset, EncodingCache, EvalOptions, Mram};

use crate::config::PipelineConfig;

fn read_corpus(path: &Path) -> Result<Corpus> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let records = read_records(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?;
    Ok(Corpus::from_records(records))
}

fn normalized(cfg: &PipelineConfig) -> Result<Corpus> {
    let path = cfg.normalized();
    if !path.exists() {
        bail!("{} does not exist; run `revloc ingest` first", path.display());
    }
    let corpus = read_corpus(&path)?;
    corpus.validate().with_context(|| format!("validating {}", path.display()))?;
    Ok(corpus)
}

/// Writes `path` through a buffer, creating parent directories.
fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    body(&mut w)?;
    w.flush()?;
    Ok(())
}

fn seed_header(w: &mut impl Write, seed: u64) -> Result<()> {
    writeln!(w, "# seed={seed}")?;
    Ok(())
}

pub fn synth(out: &Path, reports: usize, seed: u64) -> Result<()> {
    let cfg = SyntheticConfig {
        reports,
        seed,
        ..SyntheticConfig::default()
    };
    let records = generate_records(&cfg);
    write_file(out, |w| Ok(write_records(w, &records)?))?;
    println!("wrote {} records to {}", records.len(), out.display());
    Ok(())
}

pub fn ingest(cfg: &PipelineConfig) -> Result<()> {
    if !cfg.corpus.exists() {
        bail!("corpus {} does not exist", cfg.corpus.display());
    }
    let file = File::open(&cfg.corpus).with_context(|| format!("opening {}", cfg.corpus.display()))?;
    let records = read_records(BufReader::new(file)).with_context(|| format!("reading {}", cfg.corpus.display()))?;
    let corpus = normalize(records)?;
    corpus.validate()?;
    let s = corpus.summary();
    write_file(&cfg.normalized(), |w| Ok(write_records(w, &corpus.into_records())?))?;
    let rows = [
        ("files", s.files),
        ("methods", s.methods),
        ("reports", s.reports),
        ("commits", s.commits),
        ("revisions", s.revisions),
        ("fix_links", s.fix_links),
    ];
    write_file(&cfg.output.join("summary.tsv"), |w| {
        seed_header(w, cfg.seed)?;
        for (k, v) in rows {
            writeln!(w, "{k}\t{v}")?;
        }
        Ok(())
    })?;
    for (k, v) in rows {
        println!("{k}\t{v}");
    }
    Ok(())
}

fn with_similarity(mut graph: RevisionGraph, cfg: &PipelineConfig) -> Result<RevisionGraph> {
    let store = SimilarityStore::compute(&graph.fix_bipartite(), &cfg.simrank)?;
    graph.attach_similarity(&store);
    Ok(graph)
}

fn save_graph(graph: &RevisionGraph, cfg: &PipelineConfig) -> Result<()> {
    write_file(&cfg.graph, |w| Ok(graph.save(w)?))?;
    println!(
        "graph at revision {}: {} nodes, {} edges -> {}",
        graph.revision().map_or("-".to_string(), |r| r.to_string()),
        graph.nodes().len(),
        graph.edges().len(),
        cfg.graph.display()
    );
    Ok(())
}

pub fn graph_build(cfg: &PipelineConfig) -> Result<()> {
    let corpus = normalized(cfg)?;
    let snapshots: Vec<CorpusSnapshot> = corpus.snapshots().collect();
    let graph = build_graph(&snapshots, &corpus.fix_links())?;
    save_graph(&with_similarity(graph, cfg)?, cfg)
}

/// Merges only the revisions the stored graph has not seen.
pub fn graph_update(cfg: &PipelineConfig) -> Result<()> {
    let corpus = normalized(cfg)?;
    let file = File::open(&cfg.graph).with_context(|| format!("opening graph store {}", cfg.graph.display()))?;
    let mut graph =
        RevisionGraph::load(BufReader::new(file)).with_context(|| format!("loading graph store {}", cfg.graph.display()))?;
    let last = corpus.last_revision();
    if let (Some(stored), Some(last)) = (graph.revision(), last) {
        if stored > last {
            bail!("graph store is at revision {stored} but the corpus ends at revision {last}");
        }
    }
    if graph.revision().is_some() && last.is_none() {
        bail!("graph store has revisions but the corpus has none");
    }
    let stored = graph.revision();
    let mut previous = stored.and_then(|r| corpus.snapshot(r));
    let mut merged = 0;
    for snap in corpus.snapshots().skip_while(|s| stored.is_some_and(|r| s.revision <= r)) {
        graph.merge_snapshot(previous.as_ref(), &snap)?;
        previous = Some(snap);
        merged += 1;
    }
    info!("merged {merged} new revisions");
    save_graph(&with_similarity(graph, cfg)?, cfg)
}

pub fn features(cfg: &PipelineConfig) -> Result<()> {
    let corpus = normalized(cfg)?;
    let index = HistoryIndex::new(&corpus, cfg.simrank)?;
    let path = cfg.output.join("features.tsv");
    let mut by_revision: std::collections::BTreeMap<u32, Vec<usize>> = Default::default();
    let mut skipped = 0;
    for (i, r) in corpus.reports.iter().enumerate() {
        match corpus.before_fix_revision(r) {
            Some(rev) => by_revision.entry(rev).or_default().push(i),
            None => skipped += 1,
        }
    }
    let mut rows = 0;
    write_file(&path, |w| {
        seed_header(w, cfg.seed)?;
        writeln!(w, "{DUMP_HEADER}")?;
        // rows grouped by revision, each group in corpus order
        for snap in corpus.snapshots() {
            let Some(reports) = by_revision.get(&snap.revision) else { continue };
            for &i in reports {
                let r = &corpus.reports[i];
                let feats = report_features(&index, r, &snap)?;
                rows += feats.len();
                write_feature_rows(
                    &mut *w,
                    snap.methods.iter().zip(feats).map(|(m, f)| (r.id.as_str(), m.id.as_str(), f)),
                )?;
            }
        }
        Ok(())
    })?;
    if skipped > 0 {
        log::warn!("{skipped} reports have no linked fix commit and were skipped");
    }
    println!("{rows} feature rows -> {}", path.display());
    Ok(())
}

pub fn train(cfg: &PipelineConfig) -> Result<()> {
    let corpus = normalized(cfg)?;
    let ds = Dataset::build(&corpus, cfg.simrank, &cfg.model)?;
    let ids: Vec<String> = ds.reports.iter().map(|r| r.id.clone()).collect();
    let outcome = Mram::train(&ds, &ids, &cfg.model)?;
    write_file(&cfg.checkpoint(), |w| Ok(outcome.model.save(w)?))?;
    write_file(&cfg.output.join("train.tsv"), |w| {
        seed_header(w, cfg.seed)?;
        writeln!(w, "epoch\tloss")?;
        for (e, l) in outcome.losses.iter().enumerate() {
            writeln!(w, "{}\t{l:.6}", e + 1)?;
        }
        Ok(())
    })?;
    println!(
        "trained on {} reports ({} excluded), final loss {:.6} -> {}",
        ids.len() - outcome.excluded.len(),
        outcome.excluded.len(),
        outcome.losses.last().copied().unwrap_or(f64::NAN),
        cfg.checkpoint().display()
    );
    Ok(())
}

pub fn rank(cfg: &PipelineConfig, report: &str, top: usize, out: &mut impl Write) -> Result<()> {
    let path = cfg.checkpoint();
    let file = File::open(&path).with_context(|| format!("opening {}; run `revloc train` first", path.display()))?;
    let model = Mram::load(BufReader::new(file)).with_context(|| format!("loading {}", path.display()))?;
    let corpus = normalized(cfg)?;
    if corpus.report(report).is_none() {
        bail!("unknown report {report}");
    }
    let ds = Dataset::build_with(&corpus, model.vocab.clone(), cfg.simrank, &model.cfg)?;
    let data = ds.report(report)?;
    let preds = model.rank(&ds, data, &mut EncodingCache::default())?;
    writeln!(out, "# seed={} report={report}", model.cfg.seed)?;
    writeln!(out, "rank\tmethod\tscore\tmatch\trcfs\tbffs\tbfrs")?;
    for (i, p) in preds.iter().take(top).enumerate() {
        writeln!(
            out,
            "{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.0}\t{:.6}",
            i + 1,
            p.method,
            p.score,
            p.e,
            p.rcfs,
            p.bffs,
            p.bfrs
        )?;
    }
    Ok(())
}

pub fn eval(cfg: &PipelineConfig, opts: EvalOptions) -> Result<()> {
    let corpus = normalized(cfg)?;
    let plan = plan_folds(&corpus.reports, &cfg.folds)?;
    let ds = Dataset::build(&corpus, cfg.simrank, &cfg.model)?;
    let result = revloc_model::evaluate(&ds, &plan, &cfg.model, opts)?;
    let dir = cfg
        .output
        .join(if opts.not_localized_only { "eval-not-localized" } else { "eval" });
    for t in &result.tasks {
        write_file(&dir.join(format!("{}.tsv", t.name)), |w| {
            seed_header(w, cfg.seed)?;
            writeln!(w, "{}", MetricReport::TSV_HEADER)?;
            t.metrics.write_tsv_row(&mut *w, &t.name)?;
            writeln!(w, "report\tranks")?;
            for (id, ranks) in t.reports.iter().zip(&t.ranks) {
                let ranks: Vec<String> = ranks.iter().map(ToString::to_string).collect();
                writeln!(w, "{id}\t{}", ranks.join(","))?;
            }
            Ok(())
        })?;
    }
    let mut table = Vec::new();
    result.write_tsv(&mut table)?;
    write_file(&dir.join("metrics.tsv"), |w| {
        seed_header(w, cfg.seed)?;
        w.write_all(&table)?;
        Ok(())
    })?;
    print!("{}", String::from_utf8_lossy(&table));
    Ok(())
}
