//! Hand-built datasets for unit tests.

use revloc_core::eval::Localization;
use revloc_core::features::FixingFeatures;

use crate::config::ModelConfig;
use crate::data::{Candidate, Dataset, MethodVersion, ReportData};
use crate::network::MethodViews;
use crate::vocab::Vocabulary;

pub const METHODS: usize = 8;

pub fn small_config() -> ModelConfig {
    ModelConfig {
        d: 4,
        match_hidden: 4,
        fusion_hidden: 4,
        epochs: 5,
        batch_reports: 4,
        seed: 11,
        ..ModelConfig::default()
    }
}

/// Eight methods with one own word each (the last two short, expanded from
/// the first two) and `reports` reports whose faulty method carries every
/// fixing feature while all others carry none.
pub fn separable(reports: usize) -> Dataset {
    let mut words: Vec<String> = (0..METHODS).map(|i| format!("own{i}")).collect();
    words.extend(["get", "put", "the", "fails", "value", "note"].map(String::from));
    let vocab = Vocabulary::from_words(words);
    let id = |w: &str| vocab.id(w);
    let versions: Vec<MethodVersion> = (0..METHODS)
        .map(|i| {
            let own = format!("own{i}");
            MethodVersion {
                id: format!("C#m{i}"),
                name: format!("m{i}"),
                revision: 0,
                statement_count: if i >= 6 { 2 } else { 8 },
                views: MethodViews {
                    tokens: vec![id(&own), id("value"), id(&own)],
                    api: if i % 2 == 0 { vec![id("get")] } else { vec![id("put"), id("get")] },
                    comment: if i % 3 == 0 { vec![] } else { vec![id("note"), id(&own)] },
                },
            }
        })
        .collect();
    let reports = (0..reports)
        .map(|k| {
            let faulty = k % METHODS;
            let candidates = (0..METHODS)
                .map(|m| Candidate {
                    version: m,
                    features: if m == faulty {
                        FixingFeatures {
                            rcfs: 2.0,
                            bffs: 3.0,
                            bfrs: 0.5,
                        }
                    } else {
                        FixingFeatures::default()
                    },
                    neighbors: if m >= 6 { vec![0, 1] } else { vec![] },
                })
                .collect();
            ReportData {
                id: format!("R{k}"),
                project: "p".into(),
                created_at: 1000 + k as i64,
                tokens: vec![id("the"), id(&format!("own{faulty}")), id("fails")],
                revision: 0,
                candidates,
                truth: vec![faulty],
                localization: Localization::Not,
            }
        })
        .collect();
    Dataset::from_parts(vocab, versions, reports).unwrap()
}

pub fn ids(ds: &Dataset) -> Vec<String> {
    ds.reports.iter().map(|r| r.id.clone()).collect()
}
