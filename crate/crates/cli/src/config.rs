//! The pipeline configuration file.
//!
//! ```toml
//! corpus = "data/corpus.jsonl"   # raw corpus records, read by `ingest`
//! output = "out"                 # every artifact is written below here
//! graph = "out/graph.txt"        # optional; defaults to <output>/graph.txt
//! seed = 7                       # overrides model.seed
//! fold_mode = "within"           # or "cross" with train_project/test_project
//!
//! [simrank]
//! decay = 0.8
//! iterations = 5
//! emit_threshold = 0.001
//!
//! [model]                        # any ModelConfig field
//! epochs = 3
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use revloc_core::eval::FoldMode;
use revloc_core::graph::SimRankConfig;
use revloc_model::ModelConfig;
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimRankSection {
    pub decay: f64,
    pub iterations: usize,
    pub emit_threshold: f64,
}

impl Default for SimRankSection {
    fn default() -> Self {
        let d = SimRankConfig::default();
        Self {
            decay: d.decay,
            iterations: d.iterations,
            emit_threshold: d.emit_threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FoldKind {
    Within,
    Cross,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    corpus: PathBuf,
    output: PathBuf,
    graph: Option<PathBuf>,
    seed: Option<u64>,
    #[serde(default = "within")]
    fold_mode: FoldKind,
    train_project: Option<String>,
    test_project: Option<String>,
    #[serde(default)]
    simrank: SimRankSection,
    #[serde(default)]
    model: ModelConfig,
}

fn within() -> FoldKind {
    FoldKind::Within
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    pub output: PathBuf,
    pub graph: PathBuf,
    pub simrank: SimRankConfig,
    pub model: ModelConfig,
    pub folds: FoldMode,
    pub seed: u64,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub corpus: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl PipelineConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base, overrides).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str, base: &Path, overrides: &Overrides) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text)?;
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };
        let corpus = overrides.corpus.clone().unwrap_or_else(|| resolve(raw.corpus));
        let output = overrides.output.clone().unwrap_or_else(|| resolve(raw.output));
        let graph = raw.graph.map(resolve).unwrap_or_else(|| output.join("graph.txt"));
        let seed = overrides.seed.or(raw.seed).unwrap_or(raw.model.seed);
        let folds = match (raw.fold_mode, raw.train_project, raw.test_project) {
            (FoldKind::Within, None, None) => FoldMode::WithinProject,
            (FoldKind::Within, _, _) => bail!("train_project/test_project only apply to fold_mode = \"cross\""),
            (FoldKind::Cross, Some(train), Some(test)) => FoldMode::CrossProject { train, test },
            (FoldKind::Cross, _, _) => bail!("fold_mode = \"cross\" needs train_project and test_project"),
        };
        let s = raw.simrank;
        if !(s.decay > 0.0 && s.decay < 1.0) {
            bail!("simrank.decay must lie in (0, 1)");
        }
        let model = ModelConfig { seed, ..raw.model };
        model.validate()?;
        Ok(Self {
            corpus,
            output,
            graph,
            simrank: SimRankConfig {
                decay: s.decay,
                iterations: s.iterations,
                emit_threshold: s.emit_threshold,
            },
            model,
            folds,
            seed,
        })
    }

    /// The normalized corpus written by `ingest`.
    pub fn normalized(&self) -> PathBuf {
        self.output.join("corpus.jsonl")
    }

    pub fn checkpoint(&self) -> PathBuf {
        self.output.join("model.ckpt")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<PipelineConfig> {
        PipelineConfig::parse(text, Path::new("/base"), &Overrides::default())
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let c = parse("corpus = \"c.jsonl\"\noutput = \"out\"\n").unwrap();
        assert_eq!(c.corpus, Path::new("/base/c.jsonl"));
        assert_eq!(c.graph, Path::new("/base/out/graph.txt"));
        assert_eq!(c.simrank, SimRankConfig::default());
        assert_eq!(c.model, ModelConfig::default());
        assert_eq!(c.folds, FoldMode::WithinProject);
        assert_eq!(c.seed, ModelConfig::default().seed);
    }

    #[test]
    fn seed_reaches_the_model() {
        let c = parse("corpus = \"c\"\noutput = \"o\"\nseed = 3\n[model]\nseed = 9\nepochs = 1\n").unwrap();
        assert_eq!((c.seed, c.model.seed, c.model.epochs), (3, 3, 1));
        let o = Overrides {
            seed: Some(5),
            output: Some("/elsewhere".into()),
            ..Overrides::default()
        };
        let c = PipelineConfig::parse("corpus = \"c\"\noutput = \"o\"\nseed = 3\n", Path::new("."), &o).unwrap();
        assert_eq!((c.seed, c.model.seed), (5, 5));
        assert_eq!(c.output, Path::new("/elsewhere"));
    }

    #[test]
    fn cross_project_needs_both_projects() {
        let c = parse("corpus = \"c\"\noutput = \"o\"\nfold_mode = \"cross\"\ntrain_project = \"a\"\ntest_project = \"b\"\n")
            .unwrap();
        assert_eq!(
            c.folds,
            FoldMode::CrossProject {
                train: "a".into(),
                test: "b".into()
            }
        );
        assert!(parse("corpus = \"c\"\noutput = \"o\"\nfold_mode = \"cross\"\n").is_err());
        assert!(parse("corpus = \"c\"\noutput = \"o\"\ntrain_project = \"a\"\n").is_err());
    }

    #[test]
    fn bad_values_are_rejected() {
        assert!(parse("corpus = \"c\"\n").is_err());
        assert!(parse("corpus = \"c\"\noutput = \"o\"\ncolour = 1\n").is_err());
        assert!(parse("corpus = \"c\"\noutput = \"o\"\n[simrank]\ndecay = 1.5\n").is_err());
        assert!(parse("corpus = \"c\"\noutput = \"o\"\n[model]\nd = 0\n").is_err());
    }
}
