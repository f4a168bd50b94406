use std::collections::{BTreeMap, HashMap};

use super::history::HistoryContext;
use crate::error::Result;

/// Revised collaborative filtering scores of `methods` for a query report.
///
/// 1. Each previous report `b_i` gets `S_ni = Σ_{j≠i} Sb(i,j)·cos(b_j, q) + cos(b_i, q)`.
/// 2. `cfs(m) = Σ S_nj / |M(b_j)|` over previous reports `b_j` that fixed `m`.
/// 3. `rcfs(m_i) = Σ_{j≠i} cfs(m_j)·Sm(i,j) + cfs(m_i)`, over the given methods.
///
/// The output is aligned with `methods`.
pub fn rcfs_scores(query: &[String], methods: &[&str], ctx: &HistoryContext<'_>) -> Result<Vec<f64>> {
    for m in methods {
        ctx.check_method(m)?;
    }
    let n = ctx.reports.len();
    if n == 0 {
        return Ok(vec![0.0; methods.len()]);
    }
    let qv = ctx.tfidf.vector(query);
    let cos: Vec<f64> = ctx
        .reports
        .iter()
        .map(|r| ctx.tfidf.vector(&r.tokens).cosine(&qv))
        .collect();
    Ok(rcfs_from_cosines(&cos, methods, ctx))
}

/// Steps 1–3 given the query's textual similarity to each previous report
/// (aligned with `ctx.reports`).
pub fn rcfs_from_cosines(cos: &[f64], methods: &[&str], ctx: &HistoryContext<'_>) -> Vec<f64> {
    assert_eq!(cos.len(), ctx.reports.len(), "one cosine per previous report");
    let position: HashMap<&str, usize> = ctx
        .reports
        .iter()
        .enumerate()
        .map(|(i, r)| (r.id.as_str(), i))
        .collect();

    // step 1
    let mut s_n = cos.to_vec();
    for (i, r) in ctx.reports.iter().enumerate() {
        for (other, score) in ctx.store.report_row(&r.id) {
            if let Some(&j) = position.get(other) {
                s_n[i] += score * cos[j];
            }
        }
    }

    // step 2
    let index: HashMap<&str, usize> = methods.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    let mut cfs = vec![0.0; methods.len()];
    for (j, r) in ctx.reports.iter().enumerate() {
        if r.fixed.is_empty() || s_n[j] == 0.0 {
            continue;
        }
        let share = s_n[j] / r.fixed.len() as f64;
        for m in &r.fixed {
            if let Some(&i) = index.get(m.as_str()) {
                cfs[i] += share;
            }
        }
    }

    // step 3
    let mut out = cfs.clone();
    for (j, &c) in cfs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        for (other, score) in ctx.store.method_row(methods[j]) {
            if let Some(&i) = index.get(other) {
                out[i] += c * score;
            }
        }
    }
    out
}

/// [`rcfs_scores`] keyed by method id.
pub fn rcfs(query: &[String], methods: &[&str], ctx: &HistoryContext<'_>) -> Result<BTreeMap<String, f64>> {
    let scores = rcfs_scores(query, methods, ctx)?;
    Ok(methods.iter().map(|m| m.to_string()).zip(scores).collect())
}
