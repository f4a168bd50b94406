use std::collections::{BTreeMap, HashMap};

/// Document frequencies over a report collection.
///
/// Weights are raw term frequency times `ln((1 + N) / (1 + df)) + 1`, so
/// terms unseen in the collection still get positive weight and a
/// document is never zeroed out just because the collection is empty.
#[derive(Debug, Clone, Default)]
pub struct TfIdf {
    docs: usize,
    df: HashMap<String, usize>,
}

impl TfIdf {
    pub fn new<'a, D, T>(docs: D) -> Self
    where
        D: IntoIterator<Item = T>,
        T: IntoIterator<Item = &'a String>,
    {
        let mut out = Self::default();
        for doc in docs {
            out.add(doc);
        }
        out
    }

    pub fn add<'a>(&mut self, doc: impl IntoIterator<Item = &'a String>) {
        self.docs += 1;
        let mut seen: Vec<&String> = doc.into_iter().collect();
        seen.sort_unstable();
        seen.dedup();
        for t in seen {
            *self.df.entry(t.clone()).or_insert(0) += 1;
        }
    }

    pub fn documents(&self) -> usize {
        self.docs
    }

    pub fn idf(&self, term: &str) -> f64 {
        let df = self.df.get(term).copied().unwrap_or(0);
        ((1 + self.docs) as f64 / (1 + df) as f64).ln() + 1.0
    }

    pub fn vector<'a>(&self, tokens: &'a [String]) -> TermVector<'a> {
        let mut tf: BTreeMap<&str, f64> = BTreeMap::new();
        for t in tokens {
            *tf.entry(t.as_str()).or_insert(0.0) += 1.0;
        }
        let weights: Vec<(&str, f64)> = tf.into_iter().map(|(t, f)| (t, f * self.idf(t))).collect();
        let norm = weights.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        TermVector { weights, norm }
    }

    /// TF-IDF cosine of two token lists, 0 when either is empty.
    pub fn cos_sim(&self, a: &[String], b: &[String]) -> f64 {
        self.vector(a).cosine(&self.vector(b))
    }
}

/// Sparse weighted term vector, sorted by term.
#[derive(Debug, Clone)]
pub struct TermVector<'a> {
    weights: Vec<(&'a str, f64)>,
    norm: f64,
}

impl TermVector<'_> {
    pub fn cosine(&self, other: &TermVector<'_>) -> f64 {
        if self.norm == 0.0 || other.norm == 0.0 {
            return 0.0;
        }
        let (mut i, mut j, mut dot) = (0, 0, 0.0);
        while i < self.weights.len() && j < other.weights.len() {
            match self.weights[i].0.cmp(other.weights[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    dot += self.weights[i].1 * other.weights[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        (dot / (self.norm * other.norm)).clamp(0.0, 1.0)
    }
}
