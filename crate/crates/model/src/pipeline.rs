use std::collections::BTreeSet;
use std::io::Write;

use log::info;
use revloc_core::eval::{truth_ranks, FoldPlan, Localization, MetricReport};

use crate::config::ModelConfig;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{EncodingCache, Mram};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalOptions {
    /// Test only on reports that name none of their faulty methods.
    pub not_localized_only: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskResult {
    pub name: String,
    pub metrics: MetricReport,
    /// Test report ids, aligned with `ranks`.
    pub reports: Vec<String>,
    /// Ranks of each report's fixed methods.
    pub ranks: Vec<Vec<usize>>,
    pub losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub tasks: Vec<TaskResult>,
    /// Per-metric mean over tasks.
    pub mean: MetricReport,
}

impl EvalResult {
    /// Per-task rows followed by a `mean` row.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", MetricReport::TSV_HEADER)?;
        for t in &self.tasks {
            t.metrics.write_tsv_row(&mut w, &t.name)?;
        }
        self.mean.write_tsv_row(&mut w, "mean")?;
        Ok(())
    }

    /// First-hit rank of every evaluated report, task by task.
    pub fn first_ranks(&self) -> Vec<usize> {
        self.tasks.iter().flat_map(|t| t.metrics.frank.iter().copied()).collect()
    }

    /// Reciprocal first-hit ranks, the per-report MRR terms.
    pub fn reciprocal_ranks(&self) -> Vec<f64> {
        self.first_ranks().iter().map(|&r| 1.0 / r as f64).collect()
    }
}

fn mean_of(tasks: &[TaskResult]) -> MetricReport {
    let n = tasks.len() as f64;
    let avg = |f: fn(&MetricReport) -> f64| tasks.iter().map(|t| f(&t.metrics)).sum::<f64>() / n;
    MetricReport {
        top1: avg(|m| m.top1),
        top5: avg(|m| m.top5),
        top10: avg(|m| m.top10),
        map: avg(|m| m.map),
        mrr: avg(|m| m.mrr),
        frank: tasks.iter().flat_map(|t| t.metrics.frank.iter().copied()).collect(),
        excluded: tasks.iter().map(|t| t.metrics.excluded).sum(),
    }
}

/// Train and test every task of `plan`.
pub fn evaluate(ds: &Dataset, plan: &FoldPlan, cfg: &ModelConfig, opts: EvalOptions) -> Result<EvalResult> {
    let mut tasks = Vec::with_capacity(plan.tasks.len());
    for task in &plan.tasks {
        let train: Vec<String> = task.train.iter().filter(|id| ds.contains(id)).cloned().collect();
        let started = std::time::Instant::now();
        let outcome = Mram::train(ds, &train, cfg)?;
        log::info!("{}: trained in {:?}", task.name, started.elapsed());
        let model = outcome.model;
        let mut cache = EncodingCache::default();
        let (mut reports, mut ranks, mut excluded) = (Vec::new(), Vec::new(), 0);
        for id in &task.test {
            if !ds.contains(id) {
                excluded += 1;
                continue;
            }
            let report = ds.report(id)?;
            if opts.not_localized_only && report.localization != Localization::Not {
                continue;
            }
            if report.truth.is_empty() {
                excluded += 1;
                continue;
            }
            let ranking = model.rank(ds, report, &mut cache)?;
            let truth: BTreeSet<String> = report
                .truth
                .iter()
                .map(|&c| ds.version(report.candidates[c].version).id.clone())
                .collect();
            let methods: Vec<&str> = ranking.iter().map(|p| p.method.as_str()).collect();
            ranks.push(truth_ranks(&methods, &truth));
            reports.push(id.clone());
        }
        if ranks.is_empty() {
            return Err(Error::Degenerate(format!("{}: no evaluable test report", task.name)));
        }
        let mut metrics = MetricReport::compute(&ranks)?;
        metrics.excluded = excluded;
        info!("{}: MRR {:.4} Top@10 {:.1}%", task.name, metrics.mrr, metrics.top10);
        tasks.push(TaskResult {
            name: task.name.clone(),
            metrics,
            reports,
            ranks,
            losses: outcome.losses,
        });
    }
    if tasks.is_empty() {
        return Err(Error::Degenerate("fold plan has no tasks".into()));
    }
    let mean = mean_of(&tasks);
    Ok(EvalResult { tasks, mean })
}
