use std::collections::{BTreeSet, HashSet};
use std::fmt;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::features::TfIdf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Localization {
    Fully,
    Partially,
    Not,
}

impl Localization {
    pub fn as_str(self) -> &'static str {
        match self {
            Localization::Fully => "fully",
            Localization::Partially => "partially",
            Localization::Not => "not",
        }
    }
}

impl fmt::Display for Localization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Whether the report text already names its faulty methods: a method counts
/// as named when its simple name, lowercased, is one of the report tokens.
pub fn categorize_report<S: AsRef<str>>(report_tokens: &[String], fixed_names: &[S]) -> Localization {
    let tokens: HashSet<&str> = report_tokens.iter().map(String::as_str).collect();
    let named = fixed_names
        .iter()
        .filter(|n| tokens.contains(n.as_ref().to_lowercase().as_str()))
        .count();
    match named {
        0 => Localization::Not,
        n if n == fixed_names.len() => Localization::Fully,
        _ => Localization::Partially,
    }
}

/// One report for the textual-similarity diagnostic.
#[derive(Debug, Clone)]
pub struct GapReport<'a> {
    pub tokens: &'a [String],
    /// Indices into the method list.
    pub fixed: BTreeSet<usize>,
}

/// Mean TF-IDF cosine between reports and their fixed methods, and between
/// reports and up to `sample_size` randomly drawn other methods each.
///
/// Document frequencies are taken over all reports and methods together.
/// Returns `(fixed_mean, irrelevant_mean)`; a side with no pairs yields 0.
pub fn tfidf_gap(reports: &[GapReport<'_>], methods: &[&[String]], sample_size: usize, seed: u64) -> (f64, f64) {
    let tfidf = TfIdf::new(reports.iter().map(|r| r.tokens).chain(methods.iter().copied()));
    let vectors: Vec<_> = methods.iter().map(|m| tfidf.vector(m)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut fixed_sum, mut fixed_n, mut other_sum, mut other_n) = (0.0, 0usize, 0.0, 0usize);
    for r in reports {
        let q = tfidf.vector(r.tokens);
        for &m in &r.fixed {
            fixed_sum += q.cosine(&vectors[m]);
            fixed_n += 1;
        }
        let others: Vec<usize> = (0..methods.len()).filter(|i| !r.fixed.contains(i)).collect();
        let take = sample_size.min(others.len());
        for k in sample(&mut rng, others.len(), take) {
            other_sum += q.cosine(&vectors[others[k]]);
            other_n += 1;
        }
    }
    let mean = |s: f64, n: usize| if n == 0 { 0.0 } else { s / n as f64 };
    (mean(fixed_sum, fixed_n), mean(other_sum, other_n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn categories() {
        let report = toks("npe in getfilename get file name and parse");
        assert_eq!(categorize_report(&report, &["getFileName", "parse"]), Localization::Fully);
        assert_eq!(categorize_report(&report, &["getFileName", "close"]), Localization::Partially);
        assert_eq!(categorize_report(&report, &["close", "open"]), Localization::Not);
        // whole tokens only
        assert_eq!(categorize_report(&report, &["pars"]), Localization::Not);
    }

    #[test]
    fn gap_fixtures() {
        let m0 = toks("alpha beta gamma");
        let m1 = toks("delta epsilon");
        let m2 = toks("zeta");
        let methods: Vec<&[String]> = vec![&m0, &m1, &m2];
        let identical = [GapReport {
            tokens: &m0,
            fixed: BTreeSet::from([0]),
        }];
        let (fixed, other) = tfidf_gap(&identical, &methods, 100, 1);
        assert!((fixed - 1.0).abs() < 1e-12);
        assert_eq!(other, 0.0);

        let disjoint = toks("omega");
        let reports = [GapReport {
            tokens: &disjoint,
            fixed: BTreeSet::from([1]),
        }];
        assert_eq!(tfidf_gap(&reports, &methods, 100, 1), (0.0, 0.0));
    }

    #[test]
    fn gap_sampling_is_seeded() {
        let ms: Vec<Vec<String>> = (0..50).map(|i| toks(&format!("w{} w{}", i % 7, i % 3))).collect();
        let methods: Vec<&[String]> = ms.iter().map(Vec::as_slice).collect();
        let q = toks("w1 w2");
        let reports = [GapReport {
            tokens: &q,
            fixed: BTreeSet::from([1]),
        }];
        assert_eq!(tfidf_gap(&reports, &methods, 5, 9), tfidf_gap(&reports, &methods, 5, 9));
    }
}
