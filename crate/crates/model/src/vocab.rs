use std::collections::{BTreeSet, HashMap};

use sha2::{Digest, Sha256};

pub const UNK: usize = 0;
const UNK_TOKEN: &str = "<unk>";

/// Token ids shared by report and code views. Id 0 stands for any token
/// not in the vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Sorted distinct tokens of `docs`.
    pub fn build<'a, D, T>(docs: D) -> Self
    where
        D: IntoIterator<Item = T>,
        T: IntoIterator<Item = &'a String>,
    {
        let distinct: BTreeSet<&str> = docs.into_iter().flatten().map(String::as_str).collect();
        Self::from_words(distinct.into_iter().filter(|w| *w != UNK_TOKEN).map(String::from))
    }

    /// Words in id order, excluding the reserved unknown token.
    pub fn from_words(words: impl IntoIterator<Item = String>) -> Self {
        let words: Vec<String> = std::iter::once(UNK_TOKEN.to_string()).chain(words).collect();
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Self { words, index }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.len() <= 1
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words[1..].iter().map(String::as_str)
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    /// Ids of the first `cap` tokens.
    pub fn encode(&self, tokens: &[String], cap: usize) -> Vec<usize> {
        tokens.iter().take(cap).map(|t| self.id(t)).collect()
    }

    /// Hex SHA-256 of the word list.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for w in &self.words {
            h.update(w.as_bytes());
            h.update(b"\n");
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}
