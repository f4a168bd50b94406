use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which optional inputs the model uses. Disabled features enter the fusion
/// layer as zeros.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ablation {
    pub rcfs: bool,
    pub bffs: bool,
    pub bfrs: bool,
    pub menn: bool,
}

impl Default for Ablation {
    fn default() -> Self {
        Self {
            rcfs: true,
            bffs: true,
            bfrs: true,
            menn: true,
        }
    }
}

impl Ablation {
    /// Every single-component ablation, labelled.
    pub fn variants() -> Vec<(&'static str, Ablation)> {
        let all = Ablation::default();
        vec![
            ("w/o rcfs", Ablation { rcfs: false, ..all }),
            ("w/o bffs", Ablation { bffs: false, ..all }),
            ("w/o bfrs", Ablation { bfrs: false, ..all }),
            ("w/o MENN", Ablation { menn: false, ..all }),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Embedding and hidden dimension.
    pub d: usize,
    pub cap_method: usize,
    pub cap_api: usize,
    pub cap_comment: usize,
    pub cap_report: usize,
    /// Methods with fewer statements are expanded with related methods.
    pub short_threshold: u32,
    pub max_similar: usize,
    pub max_callees: usize,
    pub negatives: usize,
    /// Hidden units of the match layer.
    pub match_hidden: usize,
    /// Hidden units of the fusion layer.
    pub fusion_hidden: usize,
    pub learning_rate: f64,
    pub clip: f64,
    pub epochs: usize,
    /// Reports per gradient step.
    pub batch_reports: usize,
    pub seed: u64,
    pub ablation: Ablation,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            d: 64,
            cap_method: 200,
            cap_api: 50,
            cap_comment: 50,
            cap_report: 300,
            short_threshold: 5,
            max_similar: 8,
            max_callees: 8,
            negatives: 300,
            match_hidden: 32,
            fusion_hidden: 16,
            learning_rate: 0.05,
            clip: 5.0,
            epochs: 3,
            batch_reports: 20,
            seed: 7,
            ablation: Ablation::default(),
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d", self.d),
            ("cap_method", self.cap_method),
            ("cap_api", self.cap_api),
            ("cap_comment", self.cap_comment),
            ("cap_report", self.cap_report),
            ("negatives", self.negatives),
            ("match_hidden", self.match_hidden),
            ("fusion_hidden", self.fusion_hidden),
            ("batch_reports", self.batch_reports),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be at least 1")));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !(self.clip > 0.0) {
            return Err(Error::Config("clip must be positive".into()));
        }
        Ok(())
    }

    pub(crate) fn init_bound(&self) -> f64 {
        1.0 / (self.d as f64).sqrt()
    }
}
