use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};

/// 1-based positions of the truth methods within `ranking`, ascending.
/// Truth methods missing from the ranking are skipped.
pub fn truth_ranks<S: AsRef<str>>(ranking: &[S], truth: &BTreeSet<String>) -> Vec<usize> {
    ranking
        .iter()
        .enumerate()
        .filter(|(_, m)| truth.contains(m.as_ref()))
        .map(|(i, _)| i + 1)
        .collect()
}

fn check(ranks: &[Vec<usize>]) -> Result<()> {
    if ranks.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    for (i, r) in ranks.iter().enumerate() {
        if r.is_empty() {
            return Err(Error::Argument(format!("report #{i} has no ranked truth method")));
        }
        if r[0] == 0 || r.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Argument(format!(
                "report #{i}: truth ranks must be distinct, 1-based and ascending"
            )));
        }
    }
    Ok(())
}

/// Percentage of reports whose first truth method ranks within `k`.
pub fn top_at_k(ranks: &[Vec<usize>], k: usize) -> Result<f64> {
    check(ranks)?;
    let hits = ranks.iter().filter(|r| r[0] <= k).count();
    Ok(100.0 * hits as f64 / ranks.len() as f64)
}

/// Average precision of one report: `(1/|M|) Σ_i i / rank_i`.
///
/// Summed as an exact fraction and divided once, so hand-derived values
/// such as 5/6 come out correctly rounded.
pub fn average_precision(ranks: &[usize]) -> f64 {
    exact_average_precision(ranks).unwrap_or_else(|| {
        ranks
            .iter()
            .enumerate()
            .map(|(i, &r)| (i + 1) as f64 / r as f64)
            .sum::<f64>()
            / ranks.len() as f64
    })
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn exact_average_precision(ranks: &[usize]) -> Option<f64> {
    let (mut num, mut den) = (0u128, 1u128);
    for (i, &r) in ranks.iter().enumerate() {
        let (n, d) = ((i + 1) as u128, r as u128);
        let g = gcd(den, d);
        num = num.checked_mul(d / g)?.checked_add(n.checked_mul(den / g)?)?;
        den = den.checked_mul(d / g)?;
        let h = gcd(num, den);
        (num, den) = (num / h, den / h);
    }
    den = den.checked_mul(ranks.len() as u128)?;
    let h = gcd(num, den);
    let (num, den) = (num / h, den / h);
    // exact conversion keeps the single division correctly rounded
    const EXACT: u128 = 1 << 53;
    (num <= EXACT && den <= EXACT).then(|| num as f64 / den as f64)
}

pub fn mean_average_precision(ranks: &[Vec<usize>]) -> Result<f64> {
    check(ranks)?;
    Ok(ranks.iter().map(|r| average_precision(r)).sum::<f64>() / ranks.len() as f64)
}

/// Mean reciprocal rank of the first truth method.
pub fn mean_reciprocal_rank(ranks: &[Vec<usize>]) -> Result<f64> {
    check(ranks)?;
    Ok(ranks.iter().map(|r| 1.0 / r[0] as f64).sum::<f64>() / ranks.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub top1: f64,
    pub top5: f64,
    pub top10: f64,
    pub map: f64,
    pub mrr: f64,
    /// First-hit rank per report.
    pub frank: Vec<usize>,
    /// Reports dropped because no truth method was among the candidates.
    pub excluded: usize,
}

impl MetricReport {
    pub fn compute(ranks: &[Vec<usize>]) -> Result<Self> {
        Ok(Self {
            top1: top_at_k(ranks, 1)?,
            top5: top_at_k(ranks, 5)?,
            top10: top_at_k(ranks, 10)?,
            map: mean_average_precision(ranks)?,
            mrr: mean_reciprocal_rank(ranks)?,
            frank: ranks.iter().map(|r| r[0]).collect(),
            excluded: 0,
        })
    }

    pub fn reports(&self) -> usize {
        self.frank.len()
    }

    pub const TSV_HEADER: &'static str = "label\treports\ttop1\ttop5\ttop10\tmap\tmrr\texcluded";

    pub fn write_tsv_row<W: Write>(&self, mut w: W, label: &str) -> Result<()> {
        writeln!(
            w,
            "{label}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{}",
            self.reports(),
            self.top1,
            self.top5,
            self.top10,
            self.map,
            self.mrr,
            self.excluded
        )?;
        Ok(())
    }
}

impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "reports   {:>8}", self.reports())?;
        writeln!(f, "Top@1     {:>7.4}%", self.top1)?;
        writeln!(f, "Top@5     {:>7.4}%", self.top5)?;
        writeln!(f, "Top@10    {:>7.4}%", self.top10)?;
        writeln!(f, "MAP       {:>8.4}", self.map)?;
        write!(f, "MRR       {:>8.4}", self.mrr)?;
        if self.excluded > 0 {
            write!(f, "\nexcluded  {:>8}", self.excluded)?;
        }
        Ok(())
    }
}
